//! Brute force at q = 2: every 6-subset of the 12 external lines is tested by direct
//! counting on coordinates, with nothing shared with the library but the point lists.

use std::collections::BTreeSet;

use relhem::hemisystem::{geometry, LineSet};
use relhem::polar::Geometry;
use relhem::polar::hermitian_eval;
use relhem::projective::Point;

/// All relative hemisystems of H(3,4) as sorted index lists.
#[allow(dead_code)]
pub fn brute_force() -> BTreeSet<Vec<u32>> {
    let geom = geometry(1).unwrap();
    let f = geom.field();
    let space = geom.space();
    let lines: Vec<Vec<Point>> = (0..12).map(|l| space.line_points(&geom.ext_line(l))).collect();
    // external points recomputed from the Hermitian form: isotropic, not all coordinates in GF(2)
    let ext: Vec<Point> = space
        .points()
        .filter(|p| hermitian_eval(f, &p.0, &p.0).is_zero() && !p.0.iter().all(|&x| f.in_subfield(x)))
        .collect();
    assert_eq!(ext.len(), 30);
    let mut out = BTreeSet::new();
    let mut subsets = 0;
    for mask in 0u32..1 << 12 {
        if mask.count_ones() != 6 {
            continue;
        }
        subsets += 1;
        let ok = ext.iter().all(|p| (0..12).filter(|&l| mask >> l & 1 == 1 && lines[l as usize].contains(p)).count() == 1);
        if ok {
            out.insert((0..12).filter(|&l| mask >> l & 1 == 1).collect());
        }
    }
    assert_eq!(subsets, 924);
    out
}

/// Relative hemisystem test by counting, for every external point, the member lines whose
/// PG points contain it.
#[allow(dead_code)]
pub fn recount(geom: &Geometry, lines: &LineSet) -> bool {
    let space = geom.space();
    let q = geom.q();
    let mut count = vec![0usize; space.point_count()];
    for l in lines.ones() {
        for p in space.line_points(&geom.ext_line(l as u32)) {
            count[space.index_of(&p) as usize] += 1;
        }
    }
    let f = geom.field();
    space
        .points()
        .filter(|p| hermitian_eval(f, &p.0, &p.0).is_zero() && !p.0.iter().all(|&x| f.in_subfield(x)))
        .all(|p| count[space.index_of(&p) as usize] == q / 2)
}
