//! The two planar systems used throughout the tests and shipped as map files.

use crate::map::PolyMap;
use crate::poly::Poly;

fn build(components: [&[(f64, [u32; 2])]; 2]) -> PolyMap {
    let comps = components
        .iter()
        .map(|terms| {
            Poly::from_terms(2, terms.iter().map(|(c, e)| (*c, e.to_vec()))).expect("valid terms")
        })
        .collect();
    PolyMap::new(comps).expect("valid map")
}

/// `x' = xy + y`, `y' = y³`; the basin of the origin is `ℝ × (−1, 1)`.
pub fn example_one() -> PolyMap {
    build([&[(1.0, [1, 1]), (1.0, [0, 1])], &[(1.0, [0, 3])]])
}

/// `x' = 4x² + y`, `y' = xy`.
pub fn example_two() -> PolyMap {
    build([&[(4.0, [2, 0]), (1.0, [0, 1])], &[(1.0, [1, 1])]])
}
