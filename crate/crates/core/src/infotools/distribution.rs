use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::{Error, Result};

/// Dense joint distribution over tuples `(x_0, …, x_{n−1})`, variable 0 most
/// significant in the flat index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Serialize + serde::de::DeserializeOwned")]
pub struct JointDistribution<T: Real> {
    sizes: Vec<usize>,
    p: Vec<T>,
}

impl<T: Real> JointDistribution<T> {
    /// Validates nonnegativity (entries down to −1e-12 are clipped to zero)
    /// and normalisation to 1e-10.
    pub fn new(sizes: Vec<usize>, mut p: Vec<T>) -> Result<Self> {
        let len: usize = sizes.iter().product();
        if p.len() != len || sizes.contains(&0) {
            return Err(Error::DimensionMismatch(format!("{} probabilities for alphabet sizes {sizes:?}", p.len())));
        }
        let floor = -T::lit(1e-12);
        for v in &mut p {
            if *v < floor || !v.is_finite() {
                return Err(Error::Invalid(format!("negative probability {v}")));
            }
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        let total: T = p.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-10).max(T::epsilon() * T::lit(len as f64)) {
            return Err(Error::Invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { sizes, p })
    }

    /// Normalises nonnegative weights.
    pub fn from_weights(sizes: Vec<usize>, w: Vec<T>) -> Result<Self> {
        let total: T = w.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::Invalid("weights have no positive mass".into()));
        }
        Self::new(sizes, w.into_iter().map(|v| v / total).collect())
    }

    pub fn uniform(sizes: Vec<usize>) -> Self {
        let len: usize = sizes.iter().product();
        let v = T::one() / T::lit(len as f64);
        Self { sizes, p: vec![v; len] }
    }

    /// Product of independent single-variable marginals.
    pub fn product(marginals: &[Vec<T>]) -> Result<Self> {
        let sizes: Vec<usize> = marginals.iter().map(Vec::len).collect();
        let mut p = vec![T::one()];
        for m in marginals {
            p = p.iter().flat_map(|&a| m.iter().map(move |&b| a * b)).collect();
        }
        Self::new(sizes, p)
    }

    pub fn n_vars(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[T] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Flat index of an outcome tuple.
    pub fn index(&self, outcome: &[usize]) -> usize {
        outcome.iter().zip(&self.sizes).fold(0, |acc, (&x, &s)| acc * s + x)
    }

    /// Outcome tuple of a flat index.
    pub fn outcome(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for v in (0..self.sizes.len()).rev() {
            out[v] = index % self.sizes[v];
            index /= self.sizes[v];
        }
        out
    }

    fn check_vars(&self, vars: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.n_vars()];
        for &v in vars {
            if v >= self.n_vars() || seen[v] {
                return Err(Error::Invalid(format!("variable list {vars:?} repeats or exceeds {}", self.n_vars())));
            }
            seen[v] = true;
        }
        Ok(())
    }

    /// Marginal on `vars`, in the order given.
    pub fn marginal(&self, vars: &[usize]) -> Result<Self> {
        self.check_vars(vars)?;
        let sizes: Vec<usize> = vars.iter().map(|&v| self.sizes[v]).collect();
        let len: usize = sizes.iter().product();
        let mut p = vec![T::zero(); len];
        let mut digits = vec![0usize; self.n_vars()];
        for &q in &self.p {
            let idx = vars.iter().fold(0, |acc, &v| acc * self.sizes[v] + digits[v]);
            p[idx] = p[idx] + q;
            increment(&mut digits, &self.sizes);
        }
        Ok(Self { sizes, p })
    }

    /// Probabilities of the marginal on the variables set in `mask`, in
    /// ascending variable order.
    pub fn marginal_mask(&self, mask: u64) -> Vec<T> {
        let vars: Vec<usize> = (0..self.n_vars()).filter(|&v| mask >> v & 1 == 1).collect();
        let len: usize = vars.iter().map(|&v| self.sizes[v]).product();
        let mut out = vec![T::zero(); len];
        let mut digits = vec![0usize; self.n_vars()];
        for &q in &self.p {
            let idx = vars.iter().fold(0, |acc, &v| acc * self.sizes[v] + digits[v]);
            out[idx] = out[idx] + q;
            increment(&mut digits, &self.sizes);
        }
        out
    }

    /// Conditions on `vars = values`. Returns the weight of the event and the
    /// conditional distribution of the remaining variables (ascending order),
    /// or `None` for a zero-probability event.
    pub fn condition(&self, vars: &[usize], values: &[usize]) -> Result<Option<(T, Self)>> {
        self.check_vars(vars)?;
        if vars.len() != values.len() || vars.iter().zip(values).any(|(&v, &x)| x >= self.sizes[v]) {
            return Err(Error::Invalid("conditioning values do not match variables".into()));
        }
        let rest: Vec<usize> = (0..self.n_vars()).filter(|v| !vars.contains(v)).collect();
        let sizes: Vec<usize> = rest.iter().map(|&v| self.sizes[v]).collect();
        let len: usize = sizes.iter().product();
        let mut p = vec![T::zero(); len];
        let mut digits = vec![0usize; self.n_vars()];
        let mut weight = T::zero();
        for &q in &self.p {
            if vars.iter().zip(values).all(|(&v, &x)| digits[v] == x) {
                let idx = rest.iter().fold(0, |acc, &v| acc * self.sizes[v] + digits[v]);
                p[idx] = p[idx] + q;
                weight = weight + q;
            }
            increment(&mut digits, &self.sizes);
        }
        if weight <= T::zero() {
            return Ok(None);
        }
        for v in &mut p {
            *v = *v / weight;
        }
        Ok(Some((weight, Self { sizes, p })))
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> T {
        shannon(&self.p)
    }

    /// `‖p − q‖₁`.
    pub fn l1_distance(&self, other: &Self) -> Result<T> {
        if self.sizes != other.sizes {
            return Err(Error::DimensionMismatch("distributions over different alphabets".into()));
        }
        Ok(self.p.iter().zip(&other.p).map(|(&a, &b)| (a - b).abs()).sum())
    }

    /// Product of the single-variable marginals.
    pub fn product_of_marginals(&self) -> Self {
        let marginals: Vec<Vec<T>> = (0..self.n_vars()).map(|v| self.marginal_mask(1 << v)).collect();
        Self::product(&marginals).expect("marginals of a valid distribution")
    }

    /// `I(Q_1 : … : Q_k) = Σ S(Q_g) − S(Q_1…Q_k)` for disjoint groups.
    pub fn mutual_information(&self, groups: &[&[usize]]) -> Result<T> {
        let masks = self.disjoint_masks(groups)?;
        let mut cache = EntropyCache::new(self);
        let union = masks.iter().fold(0, |a, m| a | m);
        let s: T = masks.iter().map(|&m| cache.entropy(m)).sum();
        Ok(s - cache.entropy(union))
    }

    /// `I(A : B | C) = S(AC) + S(BC) − S(ABC) − S(C)`.
    pub fn conditional_mutual_information(&self, a: &[usize], b: &[usize], c: &[usize]) -> Result<T> {
        let m = self.disjoint_masks(&[a, b, c])?;
        Ok(EntropyCache::new(self).cmi(m[0], m[1], m[2]))
    }

    /// `Σ_c p(c) I(A : B)_{p|C=c}`, the average-over-conditionals form.
    pub fn cmi_by_conditioning(&self, a: &[usize], b: &[usize], c: &[usize]) -> Result<T> {
        self.disjoint_masks(&[a, b, c])?;
        let sizes: Vec<usize> = c.iter().map(|&v| self.sizes[v]).collect();
        let count: usize = sizes.iter().product();
        let mut total = T::zero();
        let mut values = vec![0usize; c.len()];
        for _ in 0..count {
            if let Some((w, cond)) = self.condition(c, &values)? {
                // Remaining variables are renumbered in ascending order.
                let remap = |v: usize| v - c.iter().filter(|&&x| x < v).count();
                let a2: Vec<usize> = a.iter().map(|&v| remap(v)).collect();
                let b2: Vec<usize> = b.iter().map(|&v| remap(v)).collect();
                total = total + w * cond.mutual_information(&[&a2, &b2])?;
            }
            increment(&mut values, &sizes);
        }
        Ok(total)
    }

    /// Multipartite `I(Q_1 : … : Q_k | C)`.
    pub fn conditional_multipartite_information(&self, groups: &[&[usize]], c: &[usize]) -> Result<T> {
        let mut all: Vec<&[usize]> = groups.to_vec();
        all.push(c);
        let m = self.disjoint_masks(&all)?;
        let cm = m[m.len() - 1];
        let mut cache = EntropyCache::new(self);
        let union = m.iter().fold(0, |a, x| a | x);
        let k = T::lit(groups.len() as f64);
        let s: T = m[..m.len() - 1].iter().map(|&g| cache.entropy(g | cm)).sum();
        Ok(s - cache.entropy(union) - (k - T::one()) * cache.entropy(cm))
    }

    fn disjoint_masks(&self, groups: &[&[usize]]) -> Result<Vec<u64>> {
        if self.n_vars() > 63 {
            return Err(Error::Invalid("more than 63 variables".into()));
        }
        let mut seen = 0u64;
        let mut out = Vec::with_capacity(groups.len());
        for g in groups {
            let mut m = 0u64;
            for &v in *g {
                if v >= self.n_vars() {
                    return Err(Error::Invalid(format!("variable {v} out of range")));
                }
                if (seen | m) >> v & 1 == 1 {
                    return Err(Error::Invalid(format!("groups overlap at variable {v}")));
                }
                m |= 1 << v;
            }
            seen |= m;
            out.push(m);
        }
        Ok(out)
    }
}

/// Odometer increment over mixed radices, last position fastest.
pub(crate) fn increment(digits: &mut [usize], sizes: &[usize]) {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < sizes[pos] {
            return;
        }
        digits[pos] = 0;
    }
}

/// Shannon entropy (nats) of a probability vector; `0 ln 0 = 0`.
pub fn shannon<T: Real>(p: &[T]) -> T {
    p.iter().filter(|&&v| v > T::zero()).map(|&v| -v * v.ln()).sum()
}

/// Memoised marginal entropies of one distribution, keyed by variable mask.
pub struct EntropyCache<'a, T: Real> {
    dist: &'a JointDistribution<T>,
    table: std::collections::HashMap<u64, T>,
}

impl<'a, T: Real> EntropyCache<'a, T> {
    pub fn new(dist: &'a JointDistribution<T>) -> Self {
        Self { dist, table: Default::default() }
    }

    pub fn entropy(&mut self, mask: u64) -> T {
        if mask == 0 {
            return T::zero();
        }
        if let Some(&v) = self.table.get(&mask) {
            return v;
        }
        let v = shannon(&self.dist.marginal_mask(mask));
        self.table.insert(mask, v);
        v
    }

    /// `I(A : B | C)` for disjoint masks.
    pub fn cmi(&mut self, a: u64, b: u64, c: u64) -> T {
        self.entropy(a | c) + self.entropy(b | c) - self.entropy(a | b | c) - self.entropy(c)
    }

    pub fn dist(&self) -> &JointDistribution<T> {
        self.dist
    }
}

/// Bit mask of a variable list.
pub fn mask_of(vars: &[usize]) -> u64 {
    vars.iter().fold(0, |m, &v| m | 1 << v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln2() -> f64 {
        std::f64::consts::LN_2
    }

    #[test]
    fn basic_entropies() {
        let bit = JointDistribution::<f64>::uniform(vec![2]);
        assert!((bit.entropy() - ln2()).abs() < 1e-15);
        let point = JointDistribution::<f64>::new(vec![3], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(point.entropy(), 0.0);
    }

    #[test]
    fn mutual_information_examples() {
        let indep = JointDistribution::<f64>::product(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        assert!(indep.mutual_information(&[&[0], &[1]]).unwrap().abs() < 1e-15);
        let corr = JointDistribution::<f64>::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((corr.mutual_information(&[&[0], &[1]]).unwrap() - ln2()).abs() < 1e-15);
        let ghz = JointDistribution::<f64>::new(vec![2, 2, 2], vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        let mi = ghz.mutual_information(&[&[0], &[1], &[2]]).unwrap();
        assert!((mi - 2.0 * ln2()).abs() < 1e-14);
        assert!(ghz.mutual_information(&[&[0, 1], &[1]]).is_err());
    }

    #[test]
    fn marginal_and_condition() {
        let p = JointDistribution::<f64>::new(vec![2, 3], vec![0.1, 0.2, 0.1, 0.3, 0.2, 0.1]).unwrap();
        let m = p.marginal(&[1, 0]).unwrap();
        assert_eq!(m.sizes(), &[3, 2]);
        assert!((m.probs()[m.index(&[1, 0])] - 0.2).abs() < 1e-15);
        let (w, c) = p.condition(&[0], &[1]).unwrap().unwrap();
        assert!((w - 0.6).abs() < 1e-15);
        assert!((c.probs()[0] - 0.5).abs() < 1e-15);
        let z = JointDistribution::<f64>::new(vec![2, 2], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(z.condition(&[0], &[1]).unwrap().is_none());
    }

    #[test]
    fn markov_chain_has_zero_cmi() {
        // A → C → B with binary symmetric channels.
        let mut w = vec![0.0; 8];
        for a in 0..2 {
            for c in 0..2 {
                for b in 0..2 {
                    let pc = if a == c { 0.8 } else { 0.2 };
                    let pb = if b == c { 0.7 } else { 0.3 };
                    w[a * 4 + b * 2 + c] = 0.5 * pc * pb;
                }
            }
        }
        let p = JointDistribution::<f64>::new(vec![2, 2, 2], w).unwrap();
        assert!(p.conditional_mutual_information(&[0], &[1], &[2]).unwrap().abs() < 1e-14);
        assert!(p.mutual_information(&[&[0], &[1]]).unwrap() > 1e-3);
    }

    #[test]
    fn independent_conditioner_leaves_mi_unchanged() {
        let ab = [0.4, 0.1, 0.15, 0.35];
        let c = [0.25, 0.75];
        let w: Vec<f64> = ab.iter().flat_map(|&x| c.iter().map(move |&y| x * y)).collect();
        let p = JointDistribution::new(vec![2, 2, 2], w).unwrap();
        let cmi = p.conditional_mutual_information(&[0], &[1], &[2]).unwrap();
        let mi = p.mutual_information(&[&[0], &[1]]).unwrap();
        assert!((cmi - mi).abs() < 1e-14);
    }

    #[test]
    fn cmi_forms_agree_against_brute_force() {
        let mut rng = crate::rng::rng(4);
        use rand::Rng;
        for _ in 0..50 {
            let w: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let p = JointDistribution::from_weights(vec![2, 2, 2], w.clone()).unwrap();
            let total: f64 = w.iter().sum();
            // Brute force Σ_c p(c) I(A:B|C=c) straight from the table.
            let mut oracle = 0.0;
            for c in 0..2 {
                let pc: f64 = (0..4).map(|ab| w[ab * 2 + c]).sum::<f64>() / total;
                let q = |a: usize, b: usize| w[a * 4 + b * 2 + c] / total / pc;
                for a in 0..2 {
                    for b in 0..2 {
                        let pa = q(a, 0) + q(a, 1);
                        let pb = q(0, b) + q(1, b);
                        let v = q(a, b);
                        if v > 0.0 {
                            oracle += pc * v * (v / (pa * pb)).ln();
                        }
                    }
                }
            }
            let x = p.conditional_mutual_information(&[0], &[1], &[2]).unwrap();
            let y = p.cmi_by_conditioning(&[0], &[1], &[2]).unwrap();
            assert!((x - oracle).abs() < 1e-12);
            assert!((y - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision_entropy() {
        let p = JointDistribution::<f32>::uniform(vec![2, 2]);
        assert!((p.entropy() - 2.0 * std::f32::consts::LN_2).abs() < 1e-6);
    }
}
