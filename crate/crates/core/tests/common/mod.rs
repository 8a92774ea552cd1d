#![allow(dead_code)]
pub mod fidelity;
