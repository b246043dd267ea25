//! Dense 2^n x 2^n reference implementation used as a test oracle.
//! Built from explicit Kronecker products; shares no code with the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

pub type M = DMatrix<C>;
pub type V = DVector<C>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn letter(ch: char) -> M {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    let v = match ch {
        'I' => [o, z, z, o],
        'X' => [z, o, o, z],
        'Y' => [z, -i, i, z],
        'Z' => [o, z, z, -o],
        _ => panic!("bad letter {ch}"),
    };
    M::from_row_slice(2, 2, &v)
}

/// Leftmost factor acts on qubit 0, the most significant index bit.
pub fn kron_all(factors: &[M]) -> M {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

pub fn pauli(label: &str) -> M {
    kron_all(&label.chars().map(letter).collect::<Vec<_>>())
}

pub fn embed1(n: usize, q: usize, g: &M) -> M {
    let f: Vec<M> = (0..n)
        .map(|k| if k == q { g.clone() } else { M::identity(2, 2) })
        .collect();
    kron_all(&f)
}

pub fn h() -> M {
    let s = 1.0 / 2f64.sqrt();
    M::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

/// exp(−iθ/2 · P) = cos(θ/2) I − i sin(θ/2) P for any Pauli matrix P.
pub fn rot(p: &M, theta: f64) -> M {
    let d = p.nrows();
    M::identity(d, d) * c((theta / 2.0).cos(), 0.0) - p * c(0.0, (theta / 2.0).sin())
}

pub fn rx(t: f64) -> M {
    rot(&letter('X'), t)
}
pub fn ry(t: f64) -> M {
    rot(&letter('Y'), t)
}
pub fn rz(t: f64) -> M {
    rot(&letter('Z'), t)
}

pub fn cz(n: usize, a: usize, b: usize) -> M {
    let dim = 1 << n;
    let mut m = M::identity(dim, dim);
    for idx in 0..dim {
        let ba = idx >> (n - 1 - a) & 1;
        let bb = idx >> (n - 1 - b) & 1;
        if ba == 1 && bb == 1 {
            m[(idx, idx)] = c(-1.0, 0.0);
        }
    }
    m
}

pub fn zero_state(n: usize) -> V {
    let mut v = V::zeros(1 << n);
    v[0] = c(1.0, 0.0);
    v
}

pub fn expval(psi: &V, o: &M) -> f64 {
    (psi.adjoint() * o * psi)[(0, 0)].re
}

pub fn commutator(a: &M, b: &M) -> M {
    a * b - b * a
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Reduced density matrix of qubit `q` of a pure state.
pub fn reduced_1q(psi: &V, n: usize, q: usize) -> M {
    let mut r = M::zeros(2, 2);
    for i in 0..(1 << n) {
        for j in 0..(1 << n) {
            let rest_mask = !(1usize << (n - 1 - q));
            if i & rest_mask == j & rest_mask {
                let a = i >> (n - 1 - q) & 1;
                let b = j >> (n - 1 - q) & 1;
                r[(a, b)] += psi[i] * psi[j].conj();
            }
        }
    }
    r
}

/// All 4^n Pauli labels, qubit 0 first.
pub fn all_labels(n: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|p| "IXYZ".chars().map(move |ch| format!("{p}{ch}")))
            .collect();
    }
    out
}

/// Dimension of the real Lie algebra generated by `i·G_k`, computed over
/// dense matrices: vectorise, Gram–Schmidt for rank, commute until stable.
pub fn dense_closure_dim(generators: &[M]) -> usize {
    let mut basis: Vec<V> = Vec::new();
    let mut mats: Vec<M> = Vec::new();
    let push = |m: &M, basis: &mut Vec<V>, mats: &mut Vec<M>| -> bool {
        // Hermitian matrices form a real space: stack real and imaginary parts
        let mut v: V = V::from_iterator(
            m.len() * 2,
            m.iter().flat_map(|z| [c(z.re, 0.0), c(z.im, 0.0)]),
        );
        for b in basis.iter() {
            let p = b.dotc(&v);
            v -= b * p;
        }
        let nrm = v.norm();
        if nrm > 1e-9 {
            basis.push(v / c(nrm, 0.0));
            mats.push(m.clone());
            true
        } else {
            false
        }
    };
    for g in generators {
        push(g, &mut basis, &mut mats);
    }
    let mut i = 0;
    while i < mats.len() {
        for j in 0..i {
            // Hermitian representative of [iA, iB]
            let comm = commutator(&mats[i], &mats[j]) * c(0.0, -1.0);
            push(&comm, &mut basis, &mut mats);
        }
        i += 1;
    }
    mats.len()
}
