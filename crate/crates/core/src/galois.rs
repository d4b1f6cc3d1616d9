//! Arithmetic in GF(q²), q = 2^k, with GF(q) realised as the subfield fixed by `x ↦ x^q`.
//!
//! Elements are polynomial-basis bit vectors over GF(2) (bit `i` is the coefficient of `X^i`),
//! reduced modulo the lexicographically smallest irreducible polynomial of degree `2k`.
//! Multiplication is table driven; every supported field has at most 256 elements.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported exponent `k` (q = 16, q² = 256).
pub const MAX_K: u32 = 4;

/// An element of GF(q²), stored as its canonical bit encoding.
#[derive(Copy, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Elem(pub u8);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self.0
    }
}

// addition in characteristic 2 is XOR of the coefficient bits
impl Add for Elem {
    type Output = Elem;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Elem) -> Elem {
        Elem(self.0 ^ rhs.0)
    }
}

impl AddAssign for Elem {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Elem) {
        self.0 ^= rhs.0;
    }
}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Carry-less product of two polynomials over GF(2).
fn clmul(a: u32, b: u32) -> u32 {
    let mut acc = 0;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

fn poly_degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

fn poly_rem(mut a: u32, m: u32) -> u32 {
    let dm = poly_degree(m);
    while a != 0 && poly_degree(a) >= dm {
        a ^= m << (poly_degree(a) - dm);
    }
    a
}

fn is_irreducible(p: u32) -> bool {
    let d = poly_degree(p);
    if d <= 0 {
        return false;
    }
    // trial division by every polynomial of degree 1..=d/2
    for div in 2u32..(1 << (d / 2 + 1)) {
        if poly_rem(p, div) == 0 {
            return false;
        }
    }
    true
}

/// Lexicographically smallest irreducible polynomial of degree `d` over GF(2).
pub fn lowest_irreducible(d: u32) -> u32 {
    (1u32 << d..1u32 << (d + 1))
        .find(|&p| is_irreducible(p))
        .expect("irreducible polynomials exist in every degree")
}

/// The tower GF(2) ⊂ GF(q) ⊂ GF(q²) together with the distinguished elements
/// υ, α, γ (all satisfying `x^q + x = 1`), β = α + 1 and the norm ν = υ^{q+1}.
#[derive(Clone)]
pub struct Field {
    k: u32,
    degree: u32,
    size: usize,
    modulus_q: u32,
    modulus_q2: u32,
    mul: Vec<u8>,
    inv: Vec<u8>,
    sq: Vec<u8>,
    subfield: Vec<bool>,
    upsilon: Elem,
    alpha: Elem,
    gamma: Elem,
    nu: Elem,
    subfield_generator: Elem,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("q", &self.q())
            .field("modulus_q2", &format_args!("{:#b}", self.modulus_q2))
            .field("upsilon", &self.upsilon)
            .finish()
    }
}

impl Field {
    /// Builds GF(q²) for q = 2^k, 1 ≤ k ≤ 4.
    pub fn new(k: u32) -> Result<Field> {
        if k == 0 || k > MAX_K {
            return Err(Error::UnsupportedQ(format!("k = {k} (supported: 1..={MAX_K})")));
        }
        let degree = 2 * k;
        let size = 1usize << degree;
        let modulus_q2 = lowest_irreducible(degree);
        let modulus_q = lowest_irreducible(k);

        let mut mul = vec![0u8; size * size];
        for a in 0..size {
            for b in a..size {
                let p = poly_rem(clmul(a as u32, b as u32), modulus_q2) as u8;
                mul[a * size + b] = p;
                mul[b * size + a] = p;
            }
        }
        let mut inv = vec![0u8; size];
        for a in 1..size {
            inv[a] = (1..size).find(|&b| mul[a * size + b] == 1).unwrap() as u8;
        }
        let sq = (0..size).map(|a| mul[a * size + a]).collect::<Vec<u8>>();

        let mut field = Field {
            k,
            degree,
            size,
            modulus_q,
            modulus_q2,
            mul,
            inv,
            sq,
            subfield: Vec::new(),
            upsilon: Elem::ZERO,
            alpha: Elem::ZERO,
            gamma: Elem::ZERO,
            nu: Elem::ZERO,
            subfield_generator: Elem::ONE,
        };
        field.subfield = (0..size).map(|a| field.q_power(Elem(a as u8)) == Elem(a as u8)).collect();

        let trace_one = field
            .elements()
            .find(|&x| field.rel_trace(x) == Elem::ONE)
            .expect("relative trace is surjective");
        field.upsilon = trace_one;
        field.alpha = trace_one;
        field.gamma = trace_one;
        field.nu = field.rel_norm(trace_one);

        // smallest element generating the multiplicative group of GF(q)
        let q = field.q();
        let generator = field
            .subfield_elements()
            .filter(|x| !x.is_zero())
            .find(|&x| field.multiplicative_order(x) == q - 1)
            .expect("GF(q)* is cyclic");
        field.subfield_generator = generator;
        Ok(field)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// q = 2^k.
    pub fn q(&self) -> usize {
        1 << self.k
    }

    /// q² = |GF(q²)|.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Degree 2k of GF(q²) over GF(2); Frobenius exponents live modulo this.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn modulus_q(&self) -> u32 {
        self.modulus_q
    }

    pub fn modulus_q2(&self) -> u32 {
        self.modulus_q2
    }

    pub fn upsilon(&self) -> Elem {
        self.upsilon
    }

    pub fn alpha(&self) -> Elem {
        self.alpha
    }

    pub fn beta(&self) -> Elem {
        self.alpha + Elem::ONE
    }

    pub fn gamma(&self) -> Elem {
        self.gamma
    }

    /// ν = υ^{q+1}, the coefficient of x₂² in the hyperbolic quadric; lies in GF(q).
    pub fn nu(&self) -> Elem {
        self.nu
    }

    /// A generator of GF(q)*; its first k powers form a GF(2)-basis of GF(q).
    pub fn subfield_generator(&self) -> Elem {
        self.subfield_generator
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..self.size).map(|a| Elem(a as u8))
    }

    pub fn subfield_elements(&self) -> impl Iterator<Item = Elem> + '_ {
        self.elements().filter(move |x| self.subfield[x.0 as usize])
    }

    /// GF(2)-basis {1, w, …, w^{k-1}} of GF(q).
    pub fn subfield_basis(&self) -> Vec<Elem> {
        let mut out = Vec::with_capacity(self.k as usize);
        let mut x = Elem::ONE;
        for _ in 0..self.k {
            out.push(x);
            x = self.mul(x, self.subfield_generator);
        }
        out
    }

    #[inline]
    pub fn in_subfield(&self, x: Elem) -> bool {
        self.subfield[x.0 as usize]
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.mul[a.0 as usize * self.size + b.0 as usize])
    }

    /// Multiplicative inverse. Panics on zero.
    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        assert!(!a.is_zero(), "inverse of zero");
        Elem(self.inv[a.0 as usize])
    }

    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Elem {
        self.mul(a, self.inv(b))
    }

    #[inline]
    pub fn square(&self, a: Elem) -> Elem {
        Elem(self.sq[a.0 as usize])
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = Elem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.square(base);
            e >>= 1;
        }
        acc
    }

    /// x^{2^e}.
    #[inline]
    pub fn frobenius(&self, x: Elem, e: u32) -> Elem {
        let mut y = x;
        for _ in 0..(e % self.degree) {
            y = self.square(y);
        }
        y
    }

    /// x^q.
    #[inline]
    pub fn q_power(&self, x: Elem) -> Elem {
        self.frobenius(x, self.k)
    }

    /// The unique square root; squaring is bijective in characteristic 2.
    pub fn sqrt(&self, x: Elem) -> Elem {
        self.frobenius(x, self.degree - 1)
    }

    /// x + x^q ∈ GF(q).
    pub fn rel_trace(&self, x: Elem) -> Elem {
        x + self.q_power(x)
    }

    /// x^{q+1} ∈ GF(q).
    pub fn rel_norm(&self, x: Elem) -> Elem {
        self.mul(x, self.q_power(x))
    }

    pub fn multiplicative_order(&self, x: Elem) -> usize {
        assert!(!x.is_zero());
        let mut y = x;
        let mut n = 1;
        while y != Elem::ONE {
            y = self.mul(y, x);
            n += 1;
        }
        n
    }

    /// The quadratic form ψ(x₁,x₂) = x₁² + ν x₂² + x₁x₂.
    pub fn psi(&self, x1: Elem, x2: Elem) -> Elem {
        self.square(x1) + self.mul(self.nu, self.square(x2)) + self.mul(x1, x2)
    }

    pub fn to_json(&self) -> FieldCtxJson {
        FieldCtxJson {
            version: 1,
            k: self.k,
            modulus_bits_q: self.modulus_q,
            modulus_bits_q2: self.modulus_q2,
            upsilon: self.upsilon.0 as u32,
            alpha: self.alpha.0 as u32,
            gamma: self.gamma.0 as u32,
        }
    }

    /// Rebuilds the field from its serialized form, rejecting any mismatch.
    pub fn from_json(json: &FieldCtxJson) -> Result<Field> {
        if json.version != 1 {
            return Err(Error::Format(format!("unsupported field version {}", json.version)));
        }
        let field = Field::new(json.k)?;
        if field.to_json() != *json {
            return Err(Error::Format("field context does not match the canonical construction".into()));
        }
        Ok(field)
    }
}

/// Versioned serialized form of a [`Field`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldCtxJson {
    pub version: u32,
    pub k: u32,
    pub modulus_bits_q: u32,
    pub modulus_bits_q2: u32,
    pub upsilon: u32,
    pub alpha: u32,
    pub gamma: u32,
}
