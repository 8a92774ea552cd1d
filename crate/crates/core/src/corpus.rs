//! benchmark programs, parameterized by size so tests can run them at
//! reduced scale.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// the running distance example: squared distance from a client point to
/// every row of a server matrix.
pub fn distance_fig(n: usize) -> String {
    format!(
        "input a: [{n},{n}] from server\n\
         input x: [{n}] from client\n\
         for i: {n} {{\n  sum(for j: {n} {{\n    (x[j] - a[i][j]) * (x[j] - a[i][j])\n  }})\n}}\n"
    )
}

/// distance benchmark with the benchmark suite's names.
pub fn distance(n: usize) -> String {
    format!(
        "input point: [{n}] from client\n\
         input tests: [{n},{n}] from server\n\
         for i: {n} {{\n  sum(for j: {n} {{\n    (point[j] - tests[i][j]) * (point[j] - tests[i][j])\n  }})\n}}\n"
    )
}

/// multi-output convolution over an `n`x`n` image with `f` 3x3 filters.
pub fn conv_simo(n: usize, f: usize) -> String {
    let m = n - 2;
    format!(
        "input img: [{n},{n}] from client\n\
         input filter: [{f},3,3] from server\n\
         for x: {m} {{\n  for y: {m} {{\n    for out: {f} {{\n      sum(for i: 3 {{\n        sum(for j: 3 {{\n          img[x + i][y + j] * filter[out][i][j]\n        }})\n      }})\n    }}\n  }}\n}}\n"
    )
}

/// single-output convolution over an `n`x`n` image with one 3x3 filter.
pub fn conv_siso(n: usize) -> String {
    let m = n - 2;
    format!(
        "input img: [{n},{n}] from client\n\
         input filter: [3,3] from server\n\
         for x: {m} {{\n  for y: {m} {{\n    sum(for i: 3 {{\n      sum(for j: 3 {{\n        img[x + i][y + j] * filter[i][j]\n      }})\n    }})\n  }}\n}}\n"
    )
}

/// two chained matrix products, the second consuming the first.
pub fn matmul2(n: usize) -> String {
    format!(
        "input A1: [{n},{n}] from server\n\
         input A2: [{n},{n}] from server\n\
         input B: [{n},{n}] from client\n\
         let res =\n  for i: {n} {{\n    for j: {n} {{\n      sum(for k: {n} {{ A1[i][k] * B[k][j] }})\n    }}\n  }}\nin\n\
         for i: {n} {{\n  for j: {n} {{\n    sum(for k: {n} {{ A2[i][k] * res[k][j] }})\n  }}\n}}\n"
    )
}

/// private retrieval of the value whose key equals the query.
pub fn retrieval(n: usize, bits: usize) -> String {
    format!(
        "input keys: [{n},{bits}] from client\n\
         input values: [{n}] from client\n\
         input query: [{bits}] from client\n\
         let mask =\n  for i: {n} {{\n    product(for j: {bits} {{\n      1 - ((query[j] - keys[i][j]) * (query[j] - keys[i][j]))\n    }})\n  }}\nin\n\
         sum(values * mask)\n"
    )
}

/// sum of the data of the union of two keyed sets.
pub fn set_union(n: usize, bits: usize) -> String {
    format!(
        "input a_id: [{n}, {bits}] from client\n\
         input a_data: [{n}] from client\n\
         input b_id: [{n}, {bits}] from client\n\
         input b_data: [{n}] from client\n\
         let a_sum = sum(a_data) in\n\
         let b_sum =\n  sum(for j: {n} {{\n    b_data[j] *\n    product(for i: {n} {{\n      1 -\n      product(for k: {bits} {{\n        1 - ((a_id[i][k] - b_id[j][k]) * (a_id[i][k] - b_id[j][k]))\n      }})\n    }})\n  }})\nin\n\
         a_sum + b_sum\n"
    )
}

/// the eight benchmarks at reduced scale, keyed by benchmark name.
pub fn all_reduced() -> Vec<(&'static str, String)> {
    Vec::from([
        ("conv-simo", conv_simo(8, 2)),
        ("conv-siso", conv_siso(8)),
        ("distance", distance(8)),
        ("matmul-2", matmul2(4)),
        ("retrieval-256", retrieval(16, 4)),
        ("retrieval-1024", retrieval(16, 5)),
        ("set-union-16", set_union(8, 3)),
        ("set-union-128", set_union(8, 5)),
    ])
}

/// the benchmarks that are also run at their original size.
pub fn full_scale() -> Vec<(&'static str, String)> {
    Vec::from([("distance-64", distance(64)), ("double-matmul-16", matmul2(16))])
}
