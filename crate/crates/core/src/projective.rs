//! Points and lines of PG(3,q²) with canonical forms and dense lexicographic indexing.
//!
//! Vectors are rows and maps act on the right. A point is canonical when its leftmost
//! nonzero coordinate is 1; a line is canonical when its two spanning rows are in reduced
//! row-echelon form. Point indices follow the lexicographic order of canonical coordinate
//! tuples, so `(0,0,0,1)` is point 0.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galois::{Elem, Field};

pub type Vec4 = [Elem; 4];

pub const ZERO4: Vec4 = [Elem::ZERO; 4];

/// A canonical projective point.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point(pub Vec4);

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.0;
        write!(f, "({},{},{},{})", c[0], c[1], c[2], c[3])
    }
}

/// A canonical line, stored as the reduced row-echelon basis of its span.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Line {
    rows: [Vec4; 2],
}

impl fmt::Debug for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.rows;
        write!(f, "[{:?} {:?} {:?} {:?}; {:?} {:?} {:?} {:?}]", a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3])
    }
}

impl Line {
    pub fn rows(&self) -> [Vec4; 2] {
        self.rows
    }

    /// Packed 64-bit key, unique per line.
    pub fn key(&self) -> u64 {
        let mut k = 0u64;
        for row in &self.rows {
            for x in row {
                k = (k << 8) | x.0 as u64;
            }
        }
        k
    }

    fn pivots(&self) -> (usize, usize) {
        let p = |r: &Vec4| r.iter().position(|x| !x.is_zero()).unwrap();
        (p(&self.rows[0]), p(&self.rows[1]))
    }
}

pub fn scale(f: &Field, v: &Vec4, s: Elem) -> Vec4 {
    [f.mul(v[0], s), f.mul(v[1], s), f.mul(v[2], s), f.mul(v[3], s)]
}

pub fn add4(a: &Vec4, b: &Vec4) -> Vec4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// Normalises a nonzero vector so that its leftmost nonzero entry is 1.
pub fn canonical_point(f: &Field, v: &Vec4) -> Option<Point> {
    let lead = v.iter().find(|x| !x.is_zero())?;
    if *lead == Elem::ONE {
        return Some(Point(*v));
    }
    Some(Point(scale(f, v, f.inv(*lead))))
}

/// Reduced row-echelon form of a 2×4 matrix; `None` when the rows are dependent.
pub fn canonical_line(f: &Field, a: &Vec4, b: &Vec4) -> Option<Line> {
    let mut r0 = *a;
    let mut r1 = *b;
    let p0 = (0..4).find(|&j| !r0[j].is_zero() || !r1[j].is_zero())?;
    if r0[p0].is_zero() {
        std::mem::swap(&mut r0, &mut r1);
    }
    r0 = scale(f, &r0, f.inv(r0[p0]));
    if !r1[p0].is_zero() {
        r1 = add4(&r1, &scale(f, &r0, r1[p0]));
    }
    let p1 = (p0 + 1..4).find(|&j| !r1[j].is_zero())?;
    r1 = scale(f, &r1, f.inv(r1[p1]));
    if !r0[p1].is_zero() {
        r0 = add4(&r0, &scale(f, &r1, r0[p1]));
    }
    Some(Line { rows: [r0, r1] })
}

/// PG(3,q²) over a shared field context. Points are never materialised wholesale:
/// indices are computed arithmetically.
#[derive(Clone)]
pub struct ProjectiveSpace {
    field: Arc<Field>,
}

impl ProjectiveSpace {
    pub fn new(field: Arc<Field>) -> Self {
        ProjectiveSpace { field }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn field_arc(&self) -> &Arc<Field> {
        &self.field
    }

    /// (q⁸−1)/(q²−1).
    pub fn point_count(&self) -> usize {
        let s = self.field.size();
        1 + s + s * s + s * s * s
    }

    /// (q⁴+1)(q⁴+q²+1).
    pub fn line_count(&self) -> usize {
        let s = self.field.size();
        (s * s + 1) * (s * s + s + 1)
    }

    pub fn index_of(&self, p: &Point) -> u32 {
        let s = self.field.size() as u32;
        let c = p.0.map(|x| x.0 as u32);
        if c[0] != 0 {
            1 + s + s * s + c[1] * s * s + c[2] * s + c[3]
        } else if c[1] != 0 {
            1 + s + c[2] * s + c[3]
        } else if c[2] != 0 {
            1 + c[3]
        } else {
            0
        }
    }

    pub fn point(&self, idx: u32) -> Point {
        let s = self.field.size() as u32;
        let e = |v: u32| Elem(v as u8);
        if idx == 0 {
            Point([Elem::ZERO, Elem::ZERO, Elem::ZERO, Elem::ONE])
        } else if idx < 1 + s {
            Point([Elem::ZERO, Elem::ZERO, Elem::ONE, e(idx - 1)])
        } else if idx < 1 + s + s * s {
            let r = idx - 1 - s;
            Point([Elem::ZERO, Elem::ONE, e(r / s), e(r % s)])
        } else {
            let r = idx - 1 - s - s * s;
            Point([Elem::ONE, e(r / (s * s)), e(r / s % s), e(r % s)])
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.point_count() as u32).map(move |i| self.point(i))
    }

    /// The line spanned by two distinct points.
    pub fn line_through(&self, p: &Point, r: &Point) -> Result<Line> {
        canonical_line(&self.field, &p.0, &r.0)
            .ok_or_else(|| Error::DegenerateSpan(format!("{p:?} and {r:?} coincide")))
    }

    /// Line spanned by two arbitrary vectors (array form).
    pub fn line_from_rows(&self, a: Vec4, b: Vec4) -> Result<Line> {
        canonical_line(&self.field, &a, &b)
            .ok_or_else(|| Error::DegenerateSpan(format!("rows {a:?} and {b:?} are dependent")))
    }

    /// The q²+1 points of a line: `r₀ + λ r₁` for every λ, then `r₁`. All are already canonical.
    pub fn line_points(&self, line: &Line) -> Vec<Point> {
        let [r0, r1] = line.rows;
        let mut out = Vec::with_capacity(self.field.size() + 1);
        for l in self.field.elements() {
            out.push(Point(add4(&r0, &scale(&self.field, &r1, l))));
        }
        out.push(Point(r1));
        out
    }

    pub fn contains(&self, line: &Line, p: &Point) -> bool {
        let (p0, p1) = line.pivots();
        let [r0, r1] = line.rows;
        let comb = add4(&scale(&self.field, &r0, p.0[p0]), &scale(&self.field, &r1, p.0[p1]));
        comb == p.0
    }

    /// Indices of all points x with `coeffs · x = 0`.
    pub fn hyperplane(&self, coeffs: &Vec4) -> Result<Vec<u32>> {
        if coeffs.iter().all(|x| x.is_zero()) {
            return Err(Error::Parameter("zero hyperplane coefficients".into()));
        }
        let f = &self.field;
        Ok((0..self.point_count() as u32)
            .filter(|&i| {
                let p = self.point(i).0;
                (0..4).fold(Elem::ZERO, |acc, j| acc + f.mul(coeffs[j], p[j])).is_zero()
            })
            .collect())
    }

    /// Every line of PG(3,q²) in canonical form. Intended for small q.
    pub fn all_lines(&self) -> Vec<Line> {
        let elems: Vec<Elem> = self.field.elements().collect();
        let mut out = Vec::with_capacity(self.line_count());
        for p0 in 0..4 {
            for p1 in p0 + 1..4 {
                let free0: Vec<usize> = (p0 + 1..4).filter(|&j| j != p1).collect();
                let free1: Vec<usize> = (p1 + 1..4).collect();
                let slots = free0.len() + free1.len();
                let total = elems.len().pow(slots as u32);
                for code in 0..total {
                    let mut c = code;
                    let mut r0 = ZERO4;
                    let mut r1 = ZERO4;
                    r0[p0] = Elem::ONE;
                    r1[p1] = Elem::ONE;
                    for &j in free0.iter() {
                        r0[j] = elems[c % elems.len()];
                        c /= elems.len();
                    }
                    for &j in free1.iter() {
                        r1[j] = elems[c % elems.len()];
                        c /= elems.len();
                    }
                    out.push(Line { rows: [r0, r1] });
                }
            }
        }
        out
    }
}
