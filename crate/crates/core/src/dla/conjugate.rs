//! Unitary conjugation of Pauli sums, gate by gate.

use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::qsim::{mat2_dagger, mat2_mul, Circuit, GateOp, Mat2, QsimError};
use crate::scalar::{c, Cplx, Real};

/// Which side the gate sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conjugation {
    /// `G S G†` (Schrödinger picture for operators such as states).
    Forward,
    /// `G† S G` (Heisenberg picture for observables).
    Backward,
}

fn letter_matrix<T: Real>(l: Pauli) -> Mat2<T> {
    let (o, z) = (T::one(), T::zero());
    match l {
        Pauli::I => [[c(o, z), c(z, z)], [c(z, z), c(o, z)]],
        Pauli::X => [[c(z, z), c(o, z)], [c(o, z), c(z, z)]],
        Pauli::Y => [[c(z, z), c(z, -o)], [c(z, o), c(z, z)]],
        Pauli::Z => [[c(o, z), c(z, z)], [c(z, z), c(-o, z)]],
    }
}

const AXES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

fn axis_index(l: Pauli) -> usize {
    match l {
        Pauli::X => 0,
        Pauli::Y => 1,
        Pauli::Z => 2,
        Pauli::I => unreachable!("identity letter has no axis"),
    }
}

/// `R[τ][σ] = Tr(τ · m σ m†)/2` over `σ, τ ∈ {X, Y, Z}`.
pub fn transfer_matrix<T: Real>(m: &Mat2<T>) -> [[T; 3]; 3] {
    let md = mat2_dagger(m);
    let mut r = [[T::zero(); 3]; 3];
    for (s, &sigma) in AXES.iter().enumerate() {
        let img = mat2_mul(&mat2_mul(m, &letter_matrix(sigma)), &md);
        for (t, &tau) in AXES.iter().enumerate() {
            let prod = mat2_mul(&letter_matrix(tau), &img);
            let tr: Cplx<T> = prod[0][0] + prod[1][1];
            r[t][s] = tr.re * T::lit(0.5);
        }
    }
    r
}

fn with_letter(p: &PauliString, qubit: usize, l: Pauli) -> (u64, u64) {
    let bit = 1u64 << qubit;
    let (mut x, mut z) = (p.x_mask() & !bit, p.z_mask() & !bit);
    match l {
        Pauli::X => x |= bit,
        Pauli::Y => {
            x |= bit;
            z |= bit
        }
        Pauli::Z => z |= bit,
        Pauli::I => {}
    }
    (x, z)
}

/// Conjugates every term by a single-qubit unitary `m` acting on `qubit` (`m S m†`).
pub fn conjugate_local<T: Real>(s: &PauliSum<T>, qubit: usize, m: &Mat2<T>) -> PauliSum<T> {
    let r = transfer_matrix(m);
    let mut out = PauliSum::zero(s.n_qubits());
    for (p, k) in s.terms() {
        let l = p.letter(qubit);
        if l == Pauli::I {
            out.add_term(p.key(), k);
            continue;
        }
        let si = axis_index(l);
        for (ti, &tau) in AXES.iter().enumerate() {
            let w = r[ti][si];
            if w != T::zero() {
                out.add_term(with_letter(&p, qubit, tau), k * w);
            }
        }
    }
    out.pruned(T::zero())
}

/// `CZ P CZ` for a Pauli word; CZ is Hermitian so both directions agree.
fn cz_image(p: &PauliString, a: usize, b: usize) -> (PauliString, i64) {
    let xa = p.x_mask() >> a & 1;
    let xb = p.x_mask() >> b & 1;
    let z_new = p.z_mask() ^ (xa << b) ^ (xb << a);
    // X_a X_b picks up a sign when both are present; remaining phase comes
    // from re-expressing X^x Z^z in terms of Hermitian Y letters.
    let mut e: i64 =
        (p.x_mask() & p.z_mask()).count_ones() as i64 - (p.x_mask() & z_new).count_ones() as i64;
    if xa == 1 && xb == 1 {
        e += 2;
    }
    let sign = match e.rem_euclid(4) {
        0 => 1,
        2 => -1,
        _ => unreachable!("Clifford image of a Hermitian word is Hermitian"),
    };
    let img = PauliString::from_masks(p.n_qubits(), p.x_mask(), z_new).expect("same register");
    (img, sign)
}

fn conjugate_pauli_rotation<T: Real>(
    s: &PauliSum<T>,
    generator: &PauliString,
    angle: T,
) -> PauliSum<T> {
    // e^{−iθP/2} Q e^{iθP/2} = cos θ · Q − i sin θ · PQ when {P, Q} = 0
    let (sn, cs) = angle.sin_cos();
    let gen = generator.word();
    let gsign = T::lit(generator.coeff().re as f64);
    let mut out = PauliSum::zero(s.n_qubits());
    for (q, k) in s.terms() {
        if gen.commutes_with(&q).expect("same register") {
            out.add_term(q.key(), k);
            continue;
        }
        out.add_term(q.key(), k * cs);
        let pq = gen.mul(&q).expect("same register");
        // PQ carries coefficient ±i, so −i·PQ = (Im coeff)·word
        debug_assert_eq!(pq.coeff().re, 0);
        out.add_term(pq.key(), k * sn * gsign * T::lit(pq.coeff().im as f64));
    }
    out.pruned(T::zero())
}

/// Conjugates a Pauli sum by one gate.
pub fn conjugate_gate<T: Real>(
    s: &PauliSum<T>,
    gate: &GateOp<T>,
    dir: Conjugation,
) -> Result<PauliSum<T>, QsimError> {
    gate.validate(s.n_qubits())?;
    Ok(match gate {
        GateOp::Cz(a, b) => {
            let mut out = PauliSum::zero(s.n_qubits());
            for (p, k) in s.terms() {
                let (img, sign) = cz_image(&p, *a, *b);
                out.add_term(img.key(), k * T::lit(sign as f64));
            }
            out
        }
        GateOp::PauliRotation { generator, angle } => {
            let a = match dir {
                Conjugation::Forward => *angle,
                Conjugation::Backward => -*angle,
            };
            conjugate_pauli_rotation(s, generator, a)
        }
        g => {
            let q = g.targets()[0];
            let m = g.matrix1().expect("single-qubit gate");
            let m = match dir {
                Conjugation::Forward => m,
                Conjugation::Backward => mat2_dagger(&m),
            };
            conjugate_local(s, q, &m)
        }
    })
}

/// `U S U†` where `U` is the circuit at `theta` (gates applied in order).
pub fn evolve_forward<T: Real>(
    s: &PauliSum<T>,
    circuit: &Circuit<T>,
    theta: &[T],
) -> Result<PauliSum<T>, QsimError> {
    let mut acc = s.clone();
    for g in circuit.bind(theta)? {
        acc = conjugate_gate(&acc, &g, Conjugation::Forward)?;
    }
    Ok(acc)
}

/// `U† S U` (Heisenberg picture): gates are peeled off from the last one.
pub fn evolve_backward<T: Real>(
    s: &PauliSum<T>,
    circuit: &Circuit<T>,
    theta: &[T],
) -> Result<PauliSum<T>, QsimError> {
    let mut acc = s.clone();
    for g in circuit.bind(theta)?.iter().rev() {
        acc = conjugate_gate(&acc, g, Conjugation::Backward)?;
    }
    Ok(acc)
}
