use crate::error::{Error, Result};
use crate::fem::sparse::dot;

/// Chooses the relaxation factor of each fixed-point iteration from the
/// residual r_k = η̃ − η^k.
pub trait Relaxation: Send {
    fn name(&self) -> &'static str;
    /// Forgets the history; called at the start of every time step.
    fn reset(&mut self);
    fn factor(&mut self, residual: &[f64]) -> f64;
}

pub const RELAXATION_NAMES: [&str; 2] = ["aitken", "constant"];

/// t_{k+1} = −t_k ⟨r_k, r_{k+1} − r_k⟩ / ‖r_{k+1} − r_k‖², clamped to
/// `bounds`; `bounds.1` when the residual did not change.
pub fn aitken_relax(r_k: &[f64], r_k1: &[f64], t_k: f64, bounds: (f64, f64)) -> f64 {
    let diff: Vec<f64> = r_k1.iter().zip(r_k).map(|(a, b)| a - b).collect();
    let den = dot(&diff, &diff);
    if den == 0.0 {
        return bounds.1;
    }
    let t = -t_k * dot(r_k, &diff) / den;
    if t.is_nan() {
        return bounds.1;
    }
    t.clamp(bounds.0, bounds.1)
}

#[derive(Debug, Clone)]
pub struct Aitken {
    pub initial: f64,
    pub bounds: (f64, f64),
    last: Option<(Vec<f64>, f64)>,
}

impl Aitken {
    pub fn new(initial: f64, bounds: (f64, f64)) -> Self {
        Self {
            initial,
            bounds,
            last: None,
        }
    }
}

impl Relaxation for Aitken {
    fn name(&self) -> &'static str {
        "aitken"
    }

    fn reset(&mut self) {
        self.last = None;
    }

    fn factor(&mut self, residual: &[f64]) -> f64 {
        let t = match &self.last {
            Some((r, t)) if r.len() == residual.len() => aitken_relax(r, residual, *t, self.bounds),
            _ => self.initial,
        };
        self.last = Some((residual.to_vec(), t));
        t
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Relaxation for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn reset(&mut self) {}

    fn factor(&mut self, _residual: &[f64]) -> f64 {
        self.0
    }
}

/// "aitken" starts from `initial` and stays in `bounds`; "constant" always
/// uses `initial`.
pub fn relaxation_by_name(name: &str, initial: f64, bounds: (f64, f64)) -> Result<Box<dyn Relaxation>> {
    match name {
        "aitken" => Ok(Box::new(Aitken::new(initial, bounds))),
        "constant" => Ok(Box::new(Constant(initial))),
        other => Err(Error::Config(format!(
            "unknown relaxation \"{other}\" (available: {})",
            RELAXATION_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solve_keeps_factor() {
        let r = [1.0, -2.0, 0.5];
        assert!((aitken_relax(&r, &[0.0; 3], 0.7, (0.05, 1.0)) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn halved_residual_is_clamped() {
        let r = [1.0, 2.0];
        assert_eq!(aitken_relax(&r, &[0.5, 1.0], 1.0, (0.05, 1.0)), 1.0);
        assert_eq!(aitken_relax(&r, &r, 0.3, (0.05, 0.9)), 0.9);
    }

    fn iterations(mut relax: Box<dyn Relaxation>) -> usize {
        let (c, d) = (-0.5, 1.0);
        let exact = d / (1.0 - c);
        let mut x = 0.0;
        for k in 1..=200 {
            let r = c * x + d - x;
            x += relax.factor(&[r]) * r;
            if (x - exact).abs() <= 1e-12 {
                return k;
            }
        }
        usize::MAX
    }

    #[test]
    fn aitken_beats_constant_on_scalar_map() {
        let a = iterations(relaxation_by_name("aitken", 0.5, (0.05, 1.0)).unwrap());
        let c = iterations(relaxation_by_name("constant", 0.3, (0.05, 1.0)).unwrap());
        assert!(a <= 3, "aitken took {a}");
        assert!(c >= 20, "constant took {c}");
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(relaxation_by_name("anderson", 0.5, (0.1, 1.0)), Err(Error::Config(_))));
    }
}
