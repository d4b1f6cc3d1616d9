//! Quadratic forms on GF(q²)⁴, hyperbolic quadrics with their two reguli, the Baer
//! elliptic section, and the conic in the plane x₂ = 0 with its nucleus.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galois::{Elem, Field};
use crate::polar::{hermitian_eval, is_baer};
use crate::projective::{add4, scale, Line, Point, ProjectiveSpace, Vec4};

/// Monomial order of the coefficient vector.
pub const MONOMIALS: [(usize, usize); 10] =
    [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub coeffs: [Elem; 10],
}

impl QuadraticForm {
    pub fn new(coeffs: [Elem; 10]) -> Self {
        QuadraticForm { coeffs }
    }

    /// `a x₁² + b x₂² + x₁x₂ + x₃x₄`, the shape shared by all three quadrics used here.
    pub fn split(a: Elem, b: Elem) -> Self {
        let mut c = [Elem::ZERO; 10];
        c[0] = a;
        c[1] = b;
        c[4] = Elem::ONE;
        c[9] = Elem::ONE;
        QuadraticForm { coeffs: c }
    }

    /// x₁² + υ^{q+1}x₂² + x₁x₂ + x₃x₄.
    pub fn gamma_quad(f: &Field) -> Self {
        Self::split(Elem::ONE, f.nu())
    }

    /// Q₁⁺: the quadric carrying the reguli ℛ̃₁, ℛ̃₂ as listed, βx₁² + αx₂² + x₁x₂ + x₃x₄.
    /// Written with the labels the other way round, the listed lines would not be singular
    /// (Q(λα, λβ, √α, 0) = λ²); α and β = α+1 both satisfy x + x^q + 1 = 0, so this is a
    /// relabelling and Q₂⁺ = (Q₁⁺)^q either way.
    pub fn hyp_quad1(f: &Field) -> Self {
        Self::split(f.beta(), f.alpha())
    }

    /// Q₂⁺: αx₁² + βx₂² + x₁x₂ + x₃x₄.
    pub fn hyp_quad2(f: &Field) -> Self {
        Self::split(f.alpha(), f.beta())
    }

    pub fn eval(&self, f: &Field, x: &Vec4) -> Elem {
        let mut acc = Elem::ZERO;
        for (c, &(i, j)) in self.coeffs.iter().zip(MONOMIALS.iter()) {
            if !c.is_zero() {
                acc += f.mul(*c, f.mul(x[i], x[j]));
            }
        }
        acc
    }

    /// b(x,y) = Q(x+y) + Q(x) + Q(y); only the cross terms contribute in characteristic 2.
    pub fn polar(&self, f: &Field, x: &Vec4, y: &Vec4) -> Elem {
        let mut acc = Elem::ZERO;
        for (c, &(i, j)) in self.coeffs.iter().zip(MONOMIALS.iter()).skip(4) {
            if !c.is_zero() {
                acc += f.mul(*c, f.mul(x[i], y[j]) + f.mul(x[j], y[i]));
            }
        }
        acc
    }

    /// Scales so the first nonzero coefficient is 1; forms with the same zero set up to a
    /// scalar then compare equal.
    pub fn normalized(&self, f: &Field) -> Self {
        match self.coeffs.iter().find(|c| !c.is_zero()) {
            Some(&lead) => {
                let s = f.inv(lead);
                QuadraticForm { coeffs: self.coeffs.map(|c| f.mul(c, s)) }
            }
            None => *self,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Applies x ↦ x^{2^e} to every coefficient.
    pub fn twisted(&self, f: &Field, e: u32) -> Self {
        QuadraticForm { coeffs: self.coeffs.map(|c| f.frobenius(c, e)) }
    }

    pub fn has_subfield_coefficients(&self, f: &Field) -> bool {
        self.coeffs.iter().all(|&c| f.in_subfield(c))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReguliName {
    R1,
    R2,
    R1Tilde,
    R2Tilde,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    First,
    Second,
    NotOnQuadric,
}

#[derive(Clone, Debug)]
pub struct Regulus {
    lines: Vec<Line>,
    keys: HashSet<u64>,
}

impl Regulus {
    pub fn from_lines(lines: Vec<Line>) -> Self {
        let keys = lines.iter().map(|l| l.key()).collect();
        Regulus { lines, keys }
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn contains(&self, l: &Line) -> bool {
        self.keys.contains(&l.key())
    }

    pub fn same_lines(&self, other: &Regulus) -> bool {
        self.keys == other.keys
    }
}

/// A nondegenerate hyperbolic quadric of PG(3,q²).
#[derive(Clone, Debug)]
pub struct Quadric {
    form: QuadraticForm,
    points: Vec<u32>,
    point_set: HashSet<u32>,
    reguli: [Regulus; 2],
}

impl Quadric {
    pub fn form(&self) -> &QuadraticForm {
        &self.form
    }

    /// PG point indices, ascending.
    pub fn points(&self) -> &[u32] {
        &self.points
    }

    pub fn contains_point(&self, idx: u32) -> bool {
        self.point_set.contains(&idx)
    }

    pub fn regulus(&self, i: usize) -> &Regulus {
        &self.reguli[i]
    }

    pub fn singular_lines(&self) -> impl Iterator<Item = &Line> {
        self.reguli[0].lines.iter().chain(self.reguli[1].lines.iter())
    }

    pub fn side(&self, l: &Line) -> Side {
        if self.reguli[0].contains(l) {
            Side::First
        } else if self.reguli[1].contains(l) {
            Side::Second
        } else {
            Side::NotOnQuadric
        }
    }

    /// Puts the regulus containing `l` first.
    fn orient(&mut self, l: &Line) -> Result<()> {
        match self.side(l) {
            Side::First => Ok(()),
            Side::Second => {
                self.reguli.swap(0, 1);
                Ok(())
            }
            Side::NotOnQuadric => Err(Error::DegenerateForm(format!("{l:?} is not a singular line"))),
        }
    }
}

fn is_singular_line(space: &ProjectiveSpace, form: &QuadraticForm, l: &Line) -> bool {
    let f = space.field();
    space.line_points(l).iter().all(|p| form.eval(f, &p.0).is_zero())
}

/// The two singular lines through a point of the quadric.
fn lines_through(space: &ProjectiveSpace, form: &QuadraticForm, pts: &[Point], x: &Point) -> Result<[Line; 2]> {
    let f = space.field();
    let mut found: Vec<Line> = Vec::with_capacity(2);
    for y in pts {
        if y == x || !form.polar(f, &x.0, &y.0).is_zero() {
            continue;
        }
        if found.iter().any(|l| space.contains(l, y)) {
            continue;
        }
        let l = space.line_through(x, y)?;
        if !is_singular_line(space, form, &l) {
            return Err(Error::DegenerateForm("tangent section is not a line pair".into()));
        }
        found.push(l);
        if found.len() == 2 {
            return Ok([found[0], found[1]]);
        }
    }
    Err(Error::DegenerateForm(format!("fewer than two singular lines through {x:?}")))
}

/// Zero set and reguli. The reguli are the two families of singular lines through a seed
/// point P: the lines meeting one line through P are exactly the other family.
pub fn build_quadric(space: &ProjectiveSpace, form: &QuadraticForm) -> Result<Quadric> {
    let f = space.field();
    if form.is_zero() {
        return Err(Error::DegenerateForm("zero form".into()));
    }
    // the polar Gram matrix is alternating; it is invertible iff its Pfaffian is nonzero
    let c = &form.coeffs;
    let pfaffian = f.mul(c[4], c[9]) + f.mul(c[5], c[8]) + f.mul(c[6], c[7]);
    if pfaffian.is_zero() {
        return Err(Error::DegenerateForm("polar form has a radical".into()));
    }
    let mut points = Vec::new();
    let mut pts = Vec::new();
    for i in 0..space.point_count() as u32 {
        let p = space.point(i);
        if form.eval(f, &p.0).is_zero() {
            points.push(i);
            pts.push(p);
        }
    }
    let s = f.size();
    if points.len() != (s + 1) * (s + 1) {
        return Err(Error::DegenerateForm(format!("{} points, not hyperbolic", points.len())));
    }
    let seed = pts[0];
    let [a, b] = lines_through(space, form, &pts, &seed)?;
    let family = |through: &Line, other: &Line| -> Result<Vec<Line>> {
        let mut out = vec![*through];
        for x in space.line_points(other) {
            if x == seed {
                continue;
            }
            let [l0, l1] = lines_through(space, form, &pts, &x)?;
            out.push(if l0 == *other { l1 } else { l0 });
        }
        out.sort();
        Ok(out)
    };
    let r0 = family(&a, &b)?;
    let r1 = family(&b, &a)?;
    let point_set = points.iter().copied().collect();
    Ok(Quadric { form: *form, points, point_set, reguli: [Regulus::from_lines(r0), Regulus::from_lines(r1)] })
}

/// The reguli exactly as parametrized in the constructions: `R1`/`R2` for the quadric
/// x₁² + υ^{q+1}x₂² + x₁x₂ + x₃x₄, `R1Tilde`/`R2Tilde` for αx₁² + βx₂² + x₁x₂ + x₃x₄.
pub fn paper_regulus(space: &ProjectiveSpace, which: ReguliName) -> Result<Regulus> {
    let f = space.field();
    let o = Elem::ONE;
    let z = Elem::ZERO;
    let (form, rows): (QuadraticForm, Box<dyn Fn(Elem) -> [Vec4; 2]>) = match which {
        ReguliName::R1 | ReguliName::R2 => {
            let u = f.upsilon();
            let uq = f.q_power(u);
            let first = which == ReguliName::R1;
            (
                QuadraticForm::gamma_quad(f),
                Box::new(move |l| {
                    let lu = f.mul(l, u);
                    if first {
                        [[uq, o, z, l], [lu, l, o, z]]
                    } else {
                        [[uq, o, l, z], [lu, l, z, o]]
                    }
                }),
            )
        }
        ReguliName::R1Tilde | ReguliName::R2Tilde => {
            let a = f.alpha();
            let b = f.beta();
            let sa = f.sqrt(a);
            let first = which == ReguliName::R1Tilde;
            (
                QuadraticForm::hyp_quad1(f),
                Box::new(move |l| {
                    let ls = f.mul(l, sa);
                    if first {
                        [[a, a, z, ls], [f.mul(l, a), f.mul(l, b), sa, z]]
                    } else {
                        [[a, a, ls, z], [f.mul(l, a), f.mul(l, b), z, sa]]
                    }
                }),
            )
        }
    };
    let infinity_row = match which {
        ReguliName::R1 => [z, z, z, o],
        ReguliName::R2 => [z, z, o, z],
        ReguliName::R1Tilde => [z, z, z, o],
        ReguliName::R2Tilde => [z, z, o, z],
    };
    let second_row = match which {
        ReguliName::R1 | ReguliName::R2 => [f.upsilon(), o, z, z],
        _ => [f.alpha(), f.beta(), z, z],
    };
    let mut lines = Vec::with_capacity(f.size() + 1);
    for l in f.elements() {
        let [r0, r1] = rows(l);
        lines.push(space.line_from_rows(r0, r1)?);
    }
    lines.push(space.line_from_rows(infinity_row, second_row)?);
    for l in &lines {
        if !is_singular_line(space, &form, l) {
            return Err(Error::DegenerateForm(format!("listed line {l:?} is not singular")));
        }
    }
    let set: HashSet<u64> = lines.iter().map(|l| l.key()).collect();
    if set.len() != lines.len() {
        return Err(Error::DegenerateForm("listed regulus has repeated lines".into()));
    }
    lines.sort();
    Ok(Regulus::from_lines(lines))
}

/// The quadric of `form` with its reguli ordered to match the listed regulus `first`.
pub fn labelled_quadric(space: &ProjectiveSpace, form: &QuadraticForm, first: &Regulus) -> Result<Quadric> {
    let mut quad = build_quadric(space, form)?;
    quad.orient(&first.lines()[0])?;
    if !quad.reguli[0].same_lines(first) {
        return Err(Error::DegenerateForm("listed regulus differs from the computed one".into()));
    }
    Ok(quad)
}

/// 𝒬⁺ with reguli ordered as ℛ₁, ℛ₂.
pub fn gamma_quadric(space: &ProjectiveSpace) -> Result<Quadric> {
    let r1 = paper_regulus(space, ReguliName::R1)?;
    labelled_quadric(space, &QuadraticForm::gamma_quad(space.field()), &r1)
}

/// Q₁⁺ with reguli ordered as ℛ̃₁, ℛ̃₂.
pub fn hyp_quadric1(space: &ProjectiveSpace) -> Result<Quadric> {
    let r1 = paper_regulus(space, ReguliName::R1Tilde)?;
    labelled_quadric(space, &QuadraticForm::hyp_quad1(space.field()), &r1)
}

pub fn hyp_quadric2(space: &ProjectiveSpace) -> Result<Quadric> {
    build_quadric(space, &QuadraticForm::hyp_quad2(space.field()))
}

/// Points of the quadric lying on H(3,q²).
pub fn hermitian_section(space: &ProjectiveSpace, quad: &Quadric) -> Vec<Point> {
    let f = space.field();
    quad.points().iter().map(|&i| space.point(i)).filter(|p| hermitian_eval(f, &p.0, &p.0).is_zero()).collect()
}

/// Points of the quadric in the Baer subgeometry PG(3,q).
pub fn baer_section(space: &ProjectiveSpace, quad: &Quadric) -> Vec<Point> {
    let f = space.field();
    quad.points().iter().map(|&i| space.point(i)).filter(|p| is_baer(f, &p.0)).collect()
}

/// The conic 𝒬⁺ ∩ π in the Baer plane x₂ = 0, and its nucleus, found as the radical of the
/// polar form restricted to that plane.
pub fn conic_and_nucleus(f: &Field) -> Result<(Vec<Point>, Point)> {
    let form = QuadraticForm::gamma_quad(f);
    let sub: Vec<Elem> = f.subfield_elements().collect();
    let mut plane = Vec::new();
    for &a in &sub {
        for &b in &sub {
            for &c in &sub {
                let v = [a, Elem::ZERO, b, c];
                if let Some(p) = crate::projective::canonical_point(f, &v) {
                    if p.0 == v {
                        plane.push(p);
                    }
                }
            }
        }
    }
    let conic: Vec<Point> = plane.iter().copied().filter(|p| form.eval(f, &p.0).is_zero()).collect();
    let radical: Vec<Point> = plane
        .iter()
        .copied()
        .filter(|p| plane.iter().all(|y| form.polar(f, &p.0, &y.0).is_zero()))
        .collect();
    match radical.as_slice() {
        [n] => Ok((conic, *n)),
        _ => Err(Error::DegenerateForm(format!("restricted polar form has {} radical points", radical.len()))),
    }
}

/// The points of PG(3,q) on the Baer line through `a` and `b`.
pub fn baer_line_points(f: &Field, a: &Vec4, b: &Vec4) -> Vec<Point> {
    let mut out: Vec<Point> = f
        .subfield_elements()
        .filter_map(|l| crate::projective::canonical_point(f, &add4(a, &scale(f, b, l))))
        .collect();
    out.extend(crate::projective::canonical_point(f, b));
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn space(k: u32) -> ProjectiveSpace {
        ProjectiveSpace::new(Arc::new(Field::new(k).unwrap()))
    }

    #[test]
    fn gamma_quadric_counts_q2() {
        let s = space(1);
        let quad = gamma_quadric(&s).unwrap();
        assert_eq!(quad.points().len(), 25);
        assert_eq!(quad.singular_lines().count(), 10);
        assert_eq!(quad.regulus(0).lines().len(), 5);
    }

    #[test]
    fn reguli_are_transversal() {
        let s = space(1);
        let quad = gamma_quadric(&s).unwrap();
        for a in quad.regulus(0).lines() {
            let pa: HashSet<Point> = s.line_points(a).into_iter().collect();
            for b in quad.regulus(1).lines() {
                let meet = s.line_points(b).iter().filter(|p| pa.contains(p)).count();
                assert_eq!(meet, 1);
            }
        }
        let cover: HashSet<Point> = quad.regulus(0).lines().iter().flat_map(|l| s.line_points(l)).collect();
        assert_eq!(cover.len(), 25);
    }

    #[test]
    fn listed_second_regulus_matches() {
        for k in 1..=2 {
            let s = space(k);
            let quad = gamma_quadric(&s).unwrap();
            let r2 = paper_regulus(&s, ReguliName::R2).unwrap();
            assert!(quad.regulus(1).same_lines(&r2));
            let q1 = hyp_quadric1(&s).unwrap();
            let r2t = paper_regulus(&s, ReguliName::R2Tilde).unwrap();
            assert!(q1.regulus(1).same_lines(&r2t));
        }
    }

    #[test]
    fn hermitian_section_is_baer_elliptic() {
        for k in 1..=2 {
            let s = space(k);
            let f = s.field();
            let quad = gamma_quadric(&s).unwrap();
            let sec = hermitian_section(&s, &quad);
            assert_eq!(sec.len(), f.size() + 1);
            assert!(sec.iter().all(|p| is_baer(f, &p.0)));
            assert_eq!(baer_section(&s, &quad), sec);
            // no three of them collinear: an ovoid of PG(3,q) contains no line
            for l in quad.singular_lines() {
                assert!(s.line_points(l).iter().filter(|p| is_baer(f, &p.0)).count() <= 1);
            }
        }
    }

    #[test]
    fn polar_form_is_symplectic() {
        let f = Field::new(2).unwrap();
        let form = QuadraticForm::gamma_quad(&f);
        for i in 0..4 {
            for j in 0..4 {
                let mut x = [Elem::ZERO; 4];
                let mut y = [Elem::ZERO; 4];
                x[i] = Elem::ONE;
                y[j] = Elem::ONE;
                assert_eq!(form.polar(&f, &x, &y), crate::polar::symplectic_eval(&f, &x, &y));
                let sum = add4(&x, &y);
                assert_eq!(form.polar(&f, &x, &y), form.eval(&f, &sum) + form.eval(&f, &x) + form.eval(&f, &y));
            }
        }
    }

    #[test]
    fn intersection_lines_of_the_pair() {
        let s = space(2);
        let f = s.field();
        let q1 = hyp_quadric1(&s).unwrap();
        let q2 = hyp_quadric2(&s).unwrap();
        let o = Elem::ONE;
        let z = Elem::ZERO;
        let l1 = s.line_from_rows([o, o, z, z], [z, z, o, z]).unwrap();
        let l2 = s.line_from_rows([o, o, z, z], [z, z, z, o]).unwrap();
        assert_eq!(q1.side(&l1), Side::First);
        assert_eq!(q1.side(&l2), Side::Second);
        assert_ne!(q2.side(&l1), Side::NotOnQuadric);
        let common: Vec<u32> = q1.points().iter().copied().filter(|&p| q2.contains_point(p)).collect();
        let mut on_lines: Vec<u32> =
            s.line_points(&l1).iter().chain(s.line_points(&l2).iter()).map(|p| s.index_of(p)).collect();
        on_lines.sort();
        on_lines.dedup();
        assert_eq!(common, on_lines);
        let inf = s.line_from_rows([z, z, z, o], [f.alpha(), f.beta(), z, z]).unwrap();
        assert_eq!(q1.side(&inf), Side::First);
    }

    #[test]
    fn conic_nucleus_tangency() {
        for k in 1..=2 {
            let f = Field::new(k).unwrap();
            let (conic, nucleus) = conic_and_nucleus(&f).unwrap();
            assert_eq!(conic.len(), f.q() + 1);
            assert_eq!(nucleus, Point([Elem::ONE, Elem::ZERO, Elem::ZERO, Elem::ZERO]));
            for c in &conic {
                let line = baer_line_points(&f, &nucleus.0, &c.0);
                assert_eq!(line.iter().filter(|p| conic.contains(p)).count(), 1);
            }
        }
    }

    #[test]
    fn degenerate_form_rejected() {
        let s = space(1);
        let mut c = [Elem::ZERO; 10];
        c[0] = Elem::ONE;
        assert!(build_quadric(&s, &QuadraticForm::new(c)).is_err());
    }
}
