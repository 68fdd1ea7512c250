use nalgebra::{Complex, DMatrix};

use crate::error::{domain, Error, Result};

type Complex64 = Complex<f64>;

/// Largest qubit count handled by the dense operator routines.
pub const MAX_QUBITS: usize = 6;

/// Hermitian Pauli string `i^{|x∧z|} X^x Z^z`; bit `j` of `x`/`z` is qubit `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub x: u32,
    pub z: u32,
}

impl PauliString {
    pub const IDENTITY: Self = Self { x: 0, z: 0 };

    /// Parses labels like `"XIZ"`, qubit 0 first.
    pub fn parse(label: &str) -> Result<Self> {
        let mut p = Self::IDENTITY;
        for (j, ch) in label.chars().enumerate() {
            if j >= 32 {
                return domain("Pauli label longer than 32 qubits");
            }
            let bit = 1u32 << j;
            match ch.to_ascii_uppercase() {
                'I' => {}
                'X' => p.x |= bit,
                'Z' => p.z |= bit,
                'Y' => {
                    p.x |= bit;
                    p.z |= bit;
                }
                c => return domain(format!("invalid Pauli letter {c:?} in {label:?}")),
            }
        }
        Ok(p)
    }

    pub fn label(&self, qubits: usize) -> String {
        (0..qubits)
            .map(|j| match ((self.x >> j) & 1, (self.z >> j) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            })
            .collect()
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn anticommutes(&self, o: &Self) -> bool {
        ((self.x & o.z).count_ones() + (self.z & o.x).count_ones()) % 2 == 1
    }

    /// `self · o = i^k · p`, returned as `(k mod 4, p)`.
    pub fn mul(&self, o: &Self) -> (u8, Self) {
        let p = Self { x: self.x ^ o.x, z: self.z ^ o.z };
        let a = |s: &Self| (s.x & s.z).count_ones() as i64;
        let k = a(self) + a(o) + 2 * (self.z & o.x).count_ones() as i64 - a(&p);
        (k.rem_euclid(4) as u8, p)
    }

    /// Position in the `4^N` coefficient vector.
    pub fn index(&self, qubits: usize) -> usize {
        (self.x as usize) | ((self.z as usize) << qubits)
    }

    pub fn from_index(i: usize, qubits: usize) -> Self {
        let mask = (1usize << qubits) - 1;
        Self { x: (i & mask) as u32, z: (i >> qubits) as u32 }
    }

    /// `P |j⟩ = phase · |j ⊕ x⟩`.
    fn act(&self, j: usize) -> (Complex64, usize) {
        let k = (self.x & self.z).count_ones() + 2 * (self.z & j as u32).count_ones();
        (I_POWERS[(k % 4) as usize], j ^ self.x as usize)
    }

    pub fn to_matrix(&self, qubits: usize) -> DMatrix<Complex64> {
        let d = 1usize << qubits;
        let mut m = DMatrix::zeros(d, d);
        for j in 0..d {
            let (ph, i) = self.act(j);
            m[(i, j)] = ph;
        }
        m
    }
}

const I_POWERS: [Complex64; 4] =
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];

/// All strings of the given weight on `qubits` qubits.
pub fn strings_of_weight(weight: usize, qubits: usize) -> Vec<PauliString> {
    (0..1usize << (2 * qubits))
        .map(|i| PauliString::from_index(i, qubits))
        .filter(|p| p.weight() == weight)
        .collect()
}

fn check_qubits(qubits: usize) -> Result<()> {
    if qubits == 0 || qubits > MAX_QUBITS {
        return Err(Error::Resource(format!("dense Pauli routines need 1..={MAX_QUBITS} qubits, got {qubits}")));
    }
    Ok(())
}

/// `c_P = Tr(P O) / 2^N` for every string, in [`PauliString::index`] order.
pub fn pauli_decompose(op: &DMatrix<Complex64>, qubits: usize) -> Result<Vec<Complex64>> {
    check_qubits(qubits)?;
    let d = 1usize << qubits;
    if op.nrows() != d || op.ncols() != d {
        return domain(format!("{}x{} operator on {qubits} qubits", op.nrows(), op.ncols()));
    }
    let norm = 1.0 / d as f64;
    Ok((0..d * d)
        .map(|idx| {
            let p = PauliString::from_index(idx, qubits);
            // Tr(P O) = Σ_j ⟨j|P O|j⟩ = Σ_j phase* O[x⊕j, j] with P|j'⟩ = phase|j⟩
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..d {
                let (ph, i) = p.act(j);
                // P is Hermitian: ⟨j|P|i⟩ = conj(⟨i|P|j⟩)
                acc += ph.conj() * op[(i, j)];
            }
            acc * norm
        })
        .collect())
}

/// `Σ_P c_P P`.
pub fn pauli_reconstruct(coeffs: &[Complex64], qubits: usize) -> Result<DMatrix<Complex64>> {
    check_qubits(qubits)?;
    let d = 1usize << qubits;
    if coeffs.len() != d * d {
        return domain(format!("{} coefficients for {qubits} qubits", coeffs.len()));
    }
    let mut m = DMatrix::zeros(d, d);
    for (idx, c) in coeffs.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let p = PauliString::from_index(idx, qubits);
        for j in 0..d {
            let (ph, i) = p.act(j);
            m[(i, j)] += ph * c;
        }
    }
    Ok(m)
}
