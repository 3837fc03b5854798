use super::{Array, NumericsError, Real, Result};

/// AdamW hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 5e-4 }
    }
}

/// Named parameter arrays plus AdamW moment accumulators.
///
/// Parameters keep their insertion order; that order defines gradient
/// layout and checkpoint layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T: Real> {
    names: Vec<String>,
    values: Vec<Array<T>>,
    first_moment: Vec<Array<T>>,
    second_moment: Vec<Array<T>>,
    step: u64,
}

impl<T: Real> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { names: Vec::new(), values: Vec::new(), first_moment: Vec::new(), second_moment: Vec::new(), step: 0 }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array<T>) -> usize {
        let name = name.into();
        assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.first_moment.push(Array::zeros(value.shape()));
        self.second_moment.push(Array::zeros(value.shape()));
        self.names.push(name);
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Array<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Array<T>] {
        &mut self.values
    }

    pub fn moments(&self) -> (&[Array<T>], &[Array<T>]) {
        (&self.first_moment, &self.second_moment)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Array<T>> {
        self.index_of(name).map(|i| &self.values[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Array<T>> {
        self.index_of(name).map(move |i| &mut self.values[i])
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Total number of learnable scalars.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Array::len).sum()
    }

    /// Rebuilds a store from saved parts (checkpoint loading).
    pub fn from_parts(
        names: Vec<String>,
        values: Vec<Array<T>>,
        first_moment: Vec<Array<T>>,
        second_moment: Vec<Array<T>>,
        step: u64,
    ) -> Result<Self> {
        let n = names.len();
        if values.len() != n || first_moment.len() != n || second_moment.len() != n {
            return Err(NumericsError::Shape("parameter/moment count mismatch".into()));
        }
        for i in 0..n {
            if first_moment[i].shape() != values[i].shape() || second_moment[i].shape() != values[i].shape() {
                return Err(NumericsError::Shape(format!("moment shape mismatch for {}", names[i])));
            }
        }
        Ok(Self { names, values, first_moment, second_moment, step })
    }

    /// Same parameters and moments at another precision.
    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            values: self.values.iter().map(Array::cast).collect(),
            first_moment: self.first_moment.iter().map(Array::cast).collect(),
            second_moment: self.second_moment.iter().map(Array::cast).collect(),
            step: self.step,
        }
    }

    /// One AdamW update with decoupled weight decay.
    ///
    /// Parameters are first shrunk by `(1 − lr·wd)`, then moved by the
    /// bias-corrected Adam step. Rejects the whole step if any gradient is
    /// non-finite or mis-shaped; nothing is modified in that case.
    pub fn adamw_step(&mut self, grads: &[Array<T>], lr: f64, cfg: &AdamWConfig) -> Result<()> {
        if grads.len() != self.values.len() {
            return Err(NumericsError::Shape(format!(
                "{} gradients for {} parameters",
                grads.len(),
                self.values.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.shape() != self.values[i].shape() {
                return Err(NumericsError::Shape(format!(
                    "gradient for {} has shape {:?}, expected {:?}",
                    self.names[i],
                    g.shape(),
                    self.values[i].shape()
                )));
            }
            if !g.all_finite() {
                return Err(NumericsError::NonFinite(format!("gradient for {}", self.names[i])));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::lit(cfg.beta1);
        let b2 = T::lit(cfg.beta2);
        let one = T::one();
        let bc1 = one - b1.powi(t);
        let bc2 = one - b2.powi(t);
        let lr_t = T::lit(lr);
        let eps = T::lit(cfg.eps);
        let decay = one - T::lit(lr * cfg.weight_decay);
        for i in 0..self.values.len() {
            let p = self.values[i].data_mut();
            let m = self.first_moment[i].data_mut();
            let v = self.second_moment[i].data_mut();
            for (j, &gj) in grads[i].data().iter().enumerate() {
                p[j] *= decay;
                m[j] = b1 * m[j] + (one - b1) * gj;
                v[j] = b2 * v[j] + (one - b2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr_t * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(vals: &[f64]) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.insert("w", Array::new(vec![vals.len()], vals.to_vec()).unwrap());
        s
    }

    #[test]
    fn zero_gradient_only_decays() {
        let mut s = store(&[1.0, -2.0, 0.5]);
        let cfg = AdamWConfig { weight_decay: 0.1, ..Default::default() };
        s.adamw_step(&[Array::zeros(&[3])], 0.01, &cfg).unwrap();
        let f = 1.0 - 0.01 * 0.1;
        assert_eq!(s.values()[0].data(), &[1.0 * f, -2.0 * f, 0.5 * f]);
    }

    #[test]
    fn no_decay_no_gradient_is_identity() {
        let mut s = store(&[1.0, -2.0]);
        let cfg = AdamWConfig { weight_decay: 0.0, ..Default::default() };
        s.adamw_step(&[Array::zeros(&[2])], 0.01, &cfg).unwrap();
        assert_eq!(s.values()[0].data(), &[1.0, -2.0]);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = store(&[0.0, 0.0]);
        let cfg = AdamWConfig { weight_decay: 0.0, ..Default::default() };
        let g = Array::new(vec![2], vec![0.3, -7.0]).unwrap();
        s.adamw_step(&[g], 1e-3, &cfg).unwrap();
        let v = s.values()[0].data();
        assert!((v[0] + 1e-3).abs() < 1e-9);
        assert!((v[1] - 1e-3).abs() < 1e-9);
    }

    /// Reference Adam written independently of the AdamW path.
    fn adam_reference(p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64], t: i32, lr: f64) {
        for j in 0..p.len() {
            m[j] = 0.9 * m[j] + (1.0 - 0.9) * g[j];
            v[j] = 0.999 * v[j] + (1.0 - 0.999) * g[j] * g[j];
            let mh = m[j] / (1.0 - 0.9f64.powi(t));
            let vh = v[j] / (1.0 - 0.999f64.powi(t));
            p[j] -= lr * mh / (vh.sqrt() + 1e-8);
        }
    }

    #[test]
    fn zero_decay_is_plain_adam_bitwise() {
        let mut s = store(&[0.4, -1.1, 2.0]);
        let mut p = vec![0.4, -1.1, 2.0];
        let (mut m, mut v) = (vec![0.0; 3], vec![0.0; 3]);
        let cfg = AdamWConfig { weight_decay: 0.0, ..Default::default() };
        for t in 1..=5 {
            let g = vec![0.1 * t as f64, -0.3, 0.05 / t as f64];
            s.adamw_step(&[Array::new(vec![3], g.clone()).unwrap()], 2e-3, &cfg).unwrap();
            adam_reference(&mut p, &mut m, &mut v, &g, t, 2e-3);
        }
        assert_eq!(s.values()[0].data(), p.as_slice());
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut s = store(&[1.0]);
        let before = s.clone();
        let g = Array::new(vec![1], vec![f64::NAN]).unwrap();
        assert!(matches!(s.adamw_step(&[g], 1e-3, &AdamWConfig::default()), Err(NumericsError::NonFinite(_))));
        assert_eq!(s, before);
        assert!(s.adamw_step(&[Array::zeros(&[2])], 1e-3, &AdamWConfig::default()).is_err());
    }
}
