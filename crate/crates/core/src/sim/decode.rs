use crate::circ::OutputLayout;
use crate::error::{Error, Result};
use crate::materialize::{let_slot_maps, LetSource};
use crate::tensor::Tensor;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// rebuild an array from its vectors: every element is read at a slot
/// holding it, which is position 0 for reduced dims.
pub fn decode_output(vectors: &BTreeMap<Vec<usize>, Vec<i64>>, ol: &OutputLayout, shape: &[usize]) -> Result<Tensor> {
    let ol = match ol {
        OutputLayout::Wildcard => OutputLayout::scalar(),
        o => o.clone(),
    };
    let pads = vec![None; ol.vectorized().len()];
    let src = LetSource { name: "out", shape, ol: &ol, pads: &pads, cipher: true };
    let (coords, maps, _) = let_slot_maps(&src, false);
    let n: usize = shape.iter().product();
    let mut out = vec![None; n];
    for (c, map) in coords.iter().zip(&maps) {
        let v = vectors.get(c).ok_or_else(|| Error::Sim(format!("missing output vector {c:?}")))?;
        for (i, &e) in map.iter().enumerate() {
            if e >= 0 && out[e as usize].is_none() {
                out[e as usize] = Some(v[i % v.len()]);
            }
        }
    }
    let data: Option<Vec<i64>> = out.into_iter().collect();
    let data = data.ok_or_else(|| Error::Sim(format!("output layout {ol} does not cover shape {shape:?}")))?;
    Ok(Tensor::new(shape.to_vec(), data))
}
