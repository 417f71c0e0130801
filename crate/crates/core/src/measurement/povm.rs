use serde::{Deserialize, Serialize};

use crate::rng::child;
use crate::scalar::C;
use crate::tensor::{gates, hermitian_eig};
use crate::{Error, Matrix, NumericPolicy, Result};

/// Positive operator-valued measure on `ℂ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    d: usize,
    effects: Vec<Matrix>,
    /// `√M_x`, the Lüders Kraus operators.
    kraus: Vec<Matrix>,
    /// `(w, v)` with `M_x = w |v⟩⟨v|` when every effect has rank one.
    rank_one: Option<Vec<(f64, Vec<C<f64>>)>>,
    design_order: Option<usize>,
    name: String,
}

impl Povm {
    /// Checks `Σ M_x = I` to 1e-10 and `M_x ≥ −1e-12`.
    pub fn new(d: usize, effects: Vec<Matrix>, name: &str, design_order: Option<usize>, policy: &NumericPolicy) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::Invalid("POVM without effects".into()));
        }
        let mut total = Matrix::zeros(d, d);
        let mut rank_one = Some(Vec::with_capacity(effects.len()));
        let mut kraus = Vec::with_capacity(effects.len());
        for (x, m) in effects.iter().enumerate() {
            if m.rows() != d || m.cols() != d {
                return Err(Error::DimensionMismatch(format!("effect {x} is {}x{}", m.rows(), m.cols())));
            }
            let e = hermitian_eig(m, policy)?;
            if e.values[0] < -1e-12 {
                return Err(Error::Contract(format!("effect {x} has eigenvalue {}", e.values[0])));
            }
            let top = e.values[d - 1];
            // Rounding-level eigenvalues would leak √ε ≈ 1e-8 into the square root.
            let floor = 1e-13 * top.max(0.0);
            kraus.push(e.reconstruct_with(|v| if v > floor { v.sqrt() } else { 0.0 }));
            let rank = e.values.iter().filter(|&&v| v > 1e-12 * top.max(1e-300)).count();
            match (&mut rank_one, rank) {
                (Some(list), 1) => list.push((top, e.vector(d - 1))),
                _ => rank_one = None,
            }
            total = total.add(m);
        }
        if total.sub(&Matrix::identity(d)).max_abs() > 1e-10 {
            return Err(Error::Contract("POVM effects do not sum to the identity".into()));
        }
        Ok(Self { d, effects, kraus, rank_one, design_order, name: name.to_string() })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Matrix] {
        &self.effects
    }

    pub fn effect(&self, x: usize) -> &Matrix {
        &self.effects[x]
    }

    pub fn kraus(&self, x: usize) -> &Matrix {
        &self.kraus[x]
    }

    pub fn rank_one(&self) -> Option<&[(f64, Vec<C<f64>>)]> {
        self.rank_one.as_deref()
    }

    pub fn design_order(&self) -> Option<usize> {
        self.design_order
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `Σ_x (tr M_x / d) φ_x^{⊗t}` for rank-one POVMs; equals the projector
    /// onto the symmetric subspace divided by its dimension for a t-design.
    pub fn frame_moment(&self, t: usize) -> Result<Matrix> {
        let list = self.rank_one().ok_or_else(|| Error::Contract("frame moment needs rank-one effects".into()))?;
        let dim = self.d.pow(t as u32);
        let mut out = Matrix::zeros(dim, dim);
        for (w, v) in list {
            let mut tensor = vec![C::new(1.0, 0.0)];
            for _ in 0..t {
                tensor = crate::tensor::kron_vec(&tensor, v);
            }
            out.axpy(C::new(w / self.d as f64, 0.0), &Matrix::projector(&tensor));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Export<'a> {
            name: &'a str,
            d: usize,
            design_order: Option<usize>,
            weights: Vec<f64>,
            effects: Vec<Vec<[f64; 2]>>,
        }
        let e = Export {
            name: &self.name,
            d: self.d,
            design_order: self.design_order,
            weights: self.effects.iter().map(|m| m.trace().re / self.d as f64).collect(),
            effects: self.effects.iter().map(|m| m.as_slice().iter().map(|z| [z.re, z.im]).collect()).collect(),
        };
        serde_json::to_string(&e).expect("POVM serialises")
    }

    pub fn from_json(text: &str, policy: &NumericPolicy) -> Result<Self> {
        #[derive(Deserialize)]
        struct Import {
            name: String,
            d: usize,
            design_order: Option<usize>,
            effects: Vec<Vec<[f64; 2]>>,
        }
        let i: Import = serde_json::from_str(text)?;
        let effects = i
            .effects
            .into_iter()
            .map(|e| Matrix::from_vec(i.d, i.d, e.into_iter().map(|[re, im]| C::new(re, im)).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(i.d, effects, &i.name, i.design_order, policy)
    }
}

/// Unit Bloch vectors of the 12 icosahedron vertices: cyclic permutations of
/// `(0, ±1, ±φ)`.
pub fn icosahedron_vertices() -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let norm = (1.0 + phi * phi).sqrt();
    let mut out = Vec::with_capacity(12);
    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let (a, b) = (s1 / norm, s2 * phi / norm);
        out.push([0.0, a, b]);
        out.push([a, b, 0.0]);
        out.push([b, 0.0, a]);
    }
    out
}

/// Pure qubit state with Bloch vector `v`.
pub fn bloch_state(v: [f64; 3]) -> Vec<C<f64>> {
    let theta = v[2].clamp(-1.0, 1.0).acos();
    let azimuth = v[1].atan2(v[0]);
    vec![C::new((theta / 2.0).cos(), 0.0), C::from_polar((theta / 2.0).sin(), azimuth)]
}

/// Qubit POVM with effects `(1/12)(I + v·σ)` over the icosahedron vertices;
/// the 12 states form a spherical 5-design, hence a projective 4-design.
pub fn icosahedral_povm() -> Povm {
    let (x, y, z) = (gates::pauli_x::<f64>(), gates::pauli_y::<f64>(), gates::pauli_z::<f64>());
    let effects: Vec<Matrix> = icosahedron_vertices()
        .into_iter()
        .map(|v| {
            let mut m = Matrix::identity(2);
            m.axpy(C::new(v[0], 0.0), &x);
            m.axpy(C::new(v[1], 0.0), &y);
            m.axpy(C::new(v[2], 0.0), &z);
            m.scale(1.0 / 12.0)
        })
        .collect();
    Povm::new(2, effects, "icosahedral", Some(5), &NumericPolicy::default()).expect("icosahedral POVM is valid")
}

/// `d²` Gaussian rank-one effects scaled so their sum `S` satisfies `S ≤ I`,
/// completed by the deficit effect `I − S`. Informational completeness is a
/// property of the draw; check it with [`ReconstructionMap::new`](super::ReconstructionMap::new).
pub fn random_povm(d: usize, seed: u64, policy: &NumericPolicy) -> Result<Povm> {
    let mut rng = child(seed, 0);
    let vectors: Vec<Vec<C<f64>>> = (0..d * d).map(|_| crate::random::haar_vector(d, &mut rng)).collect();
    let mut s = Matrix::zeros(d, d);
    for v in &vectors {
        s = s.add(&Matrix::projector(v));
    }
    let top = *hermitian_eig(&s, policy)?.values.last().expect("nonempty");
    let mut effects: Vec<Matrix> = vectors.iter().map(|v| Matrix::projector(v).scale(1.0 / top)).collect();
    let deficit = Matrix::identity(d).sub(&s.scale(1.0 / top)).hermitize();
    if deficit.frobenius_norm() > 1e-12 {
        effects.push(deficit);
    }
    Povm::new(d, effects, "random-rank-one", None, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedral_effects_sum_to_identity() {
        let p = icosahedral_povm();
        assert_eq!(p.outcomes(), 12);
        let total = p.effects().iter().fold(Matrix::zeros(2, 2), |a, m| a.add(m));
        assert!(total.sub(&Matrix::identity(2)).max_abs() < 1e-12);
        let list = p.rank_one().unwrap();
        for (w, v) in list {
            assert!((w - 1.0 / 6.0).abs() < 1e-12);
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_state_round_trip() {
        for v in icosahedron_vertices() {
            let psi = bloch_state(v);
            let rho = Matrix::projector(&psi);
            let got = [
                rho.real_inner(&gates::pauli_x()),
                rho.real_inner(&gates::pauli_y()),
                rho.real_inner(&gates::pauli_z()),
            ];
            for k in 0..3 {
                assert!((got[k] - v[k]).abs() < 1e-12);
            }
        }
    }

    /// Independent oracle: the symmetric projector built from permutation
    /// operators on four qubits.
    fn symmetric_projector_4() -> Matrix {
        let dim = 16;
        let mut perms = Vec::new();
        let mut p = [0usize, 1, 2, 3];
        fn heap(k: usize, p: &mut [usize; 4], out: &mut Vec<[usize; 4]>) {
            if k == 1 {
                out.push(*p);
                return;
            }
            for i in 0..k {
                heap(k - 1, p, out);
                if k.is_multiple_of(2) {
                    p.swap(i, k - 1);
                } else {
                    p.swap(0, k - 1);
                }
            }
        }
        heap(4, &mut p, &mut perms);
        assert_eq!(perms.len(), 24);
        let mut out = Matrix::zeros(dim, dim);
        for perm in perms {
            for col in 0..dim {
                let bits: Vec<usize> = (0..4).map(|q| col >> (3 - q) & 1).collect();
                let row = (0..4).fold(0, |acc, q| acc * 2 + bits[perm[q]]);
                out[(row, col)] += C::new(1.0 / 24.0, 0.0);
            }
        }
        out
    }

    #[test]
    fn fourth_frame_moment_is_symmetric_projector_over_five() {
        let m = icosahedral_povm().frame_moment(4).unwrap();
        let want = symmetric_projector_4().scale(1.0 / 5.0);
        assert!(m.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn eighth_moment_matches_haar_average() {
        let povm = icosahedral_povm();
        let list = povm.rank_one().unwrap();
        let mut rng = crate::rng::rng(17);
        // Haar oracle by sampling: E |⟨ψ|φ⟩|^8 over random φ.
        let psi0 = crate::random::haar_vector(2, &mut rng);
        let samples = 200_000;
        let mut haar = 0.0;
        for _ in 0..samples {
            let phi = crate::random::haar_vector(2, &mut rng);
            let o = (psi0[0].conj() * phi[0] + psi0[1].conj() * phi[1]).norm_sqr();
            haar += o.powi(4);
        }
        haar /= samples as f64;
        assert!((haar - 0.2).abs() < 5e-3);
        for _ in 0..100 {
            let psi = crate::random::haar_vector(2, &mut rng);
            let design: f64 = list
                .iter()
                .map(|(_, v)| (psi[0].conj() * v[0] + psi[1].conj() * v[1]).norm_sqr().powi(4) / 12.0)
                .sum();
            assert!((design - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn random_povm_is_valid() {
        let p = random_povm(3, 5, &NumericPolicy::default()).unwrap();
        assert!(p.outcomes() >= 9);
        assert!(p.rank_one().is_none() || p.outcomes() == 9);
    }

    #[test]
    fn json_round_trip() {
        let p = icosahedral_povm();
        let back = Povm::from_json(&p.to_json(), &NumericPolicy::default()).unwrap();
        assert_eq!(back.outcomes(), 12);
        for (a, b) in back.effects().iter().zip(p.effects()) {
            assert_eq!(a, b);
        }
    }
}
