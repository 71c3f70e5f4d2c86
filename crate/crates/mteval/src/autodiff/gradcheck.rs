//! Finite-difference gradient verification.

use super::{ParamSet, Tape, Tensor};
use crate::error::{Error, Result};

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest deviation `|g - fd| / max(1, |g|, |fd|)` over all coordinates.
    pub max_rel: f64,
    /// Flat coordinate index where the maximum occurred.
    pub worst_coord: usize,
    pub tol: f64,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel <= self.tol
    }
}

fn rel_dev(g: f64, fd: f64) -> f64 {
    (g - fd).abs() / 1.0_f64.max(g.abs()).max(fd.abs())
}

/// Checks the tape gradient of a scalar-valued tensor function at `point`
/// against central finite differences with the given step.
pub fn grad_check<F>(f: &F, point: &Tensor, step: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&Tape, &Tensor) -> Result<Tensor>,
{
    let (rows, cols) = point.shape();
    let base = point.values();

    let tape = Tape::new();
    let leaf = Tensor::new(rows, cols, base.clone(), true)?;
    let out = f(&tape, &leaf)?;
    if out.shape() != (1, 1) {
        return Err(Error::contract("grad_check requires a scalar-valued function"));
    }
    if !out.item().is_finite() {
        return Err(Error::Probe(format!("function value {} at base point", out.item())));
    }
    tape.backward(&out)?;
    let grad = leaf.grad().unwrap_or_else(|| vec![0.0; base.len()]);

    let probe = |values: Vec<f64>| -> Result<f64> {
        let tape = Tape::disabled();
        let x = Tensor::new(rows, cols, values, false)?;
        let y = f(&tape, &x)?;
        let v = y.item();
        if !v.is_finite() {
            return Err(Error::Probe(format!("non-finite value {v} at probe point")));
        }
        Ok(v)
    };

    let mut report = GradCheckReport {
        max_rel: 0.0,
        worst_coord: 0,
        tol,
        coords_checked: base.len(),
    };
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += step;
        let mut minus = base.clone();
        minus[i] -= step;
        let fd = (probe(plus)? - probe(minus)?) / (2.0 * step);
        let dev = rel_dev(grad[i], fd);
        if dev > report.max_rel {
            report.max_rel = dev;
            report.worst_coord = i;
        }
    }
    Ok(report)
}

/// Checks model gradients: `loss` must build the scalar loss from a binding
/// of `set`. Every coordinate of every parameter is probed.
pub fn grad_check_params<F>(set: &ParamSet, loss: &F, step: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&Tape, &super::Binding) -> Result<Tensor>,
{
    let tape = Tape::new();
    let binding = set.bind(true);
    let out = loss(&tape, &binding)?;
    if out.shape() != (1, 1) {
        return Err(Error::contract("grad_check_params requires a scalar loss"));
    }
    tape.backward(&out)?;
    let grads: Vec<Vec<f64>> = (0..set.len())
        .map(|id| {
            binding
                .leaf(id)
                .grad()
                .unwrap_or_else(|| vec![0.0; set.get(id).len()])
        })
        .collect();

    let probe = |probe_set: &ParamSet| -> Result<f64> {
        let tape = Tape::disabled();
        let binding = probe_set.bind(false);
        let y = loss(&tape, &binding)?;
        let v = y.item();
        if !v.is_finite() {
            return Err(Error::Probe(format!("non-finite loss {v} at probe point")));
        }
        Ok(v)
    };

    let mut work = set.clone();
    let mut report = GradCheckReport {
        max_rel: 0.0,
        worst_coord: 0,
        tol,
        coords_checked: set.num_scalars(),
    };
    let mut flat = 0;
    for id in 0..set.len() {
        for i in 0..set.get(id).len() {
            let orig = work.get(id).value[i];
            work.get_mut(id).value[i] = orig + step;
            let up = probe(&work)?;
            work.get_mut(id).value[i] = orig - step;
            let down = probe(&work)?;
            work.get_mut(id).value[i] = orig;
            let fd = (up - down) / (2.0 * step);
            let dev = rel_dev(grads[id][i], fd);
            if dev > report.max_rel {
                report.max_rel = dev;
                report.worst_coord = flat;
            }
            flat += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn matmul_gradient_matches_finite_differences() {
        let mut rng = crate::rng::stream(3, crate::rng::Stream::DataGen);
        let b_vals: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a_vals: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b = Tensor::new(4, 2, b_vals, false).unwrap();
        let point = Tensor::new(3, 4, a_vals, false).unwrap();
        let f = move |tape: &Tape, x: &Tensor| {
            let y = tape.matmul(x, &b)?;
            tape.reduce_mean(&y)
        };
        let report = grad_check(&f, &point, 1e-5, 1e-4).unwrap();
        assert!(report.passed(), "max_rel = {}", report.max_rel);
    }

    #[test]
    fn mul_gradient_matches_finite_differences() {
        let mut rng = crate::rng::stream(4, crate::rng::Stream::DataGen);
        let other: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let point_vals: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let other = Tensor::new(2, 5, other, false).unwrap();
        let point = Tensor::new(2, 5, point_vals, false).unwrap();
        let f = move |tape: &Tape, x: &Tensor| {
            let y = tape.mul(x, &other)?;
            tape.reduce_mean(&y)
        };
        let report = grad_check(&f, &point, 1e-5, 1e-4).unwrap();
        assert!(report.passed(), "max_rel = {}", report.max_rel);
    }

    #[test]
    fn tanh_gradient_matches_finite_differences() {
        let mut rng = crate::rng::stream(5, crate::rng::Stream::DataGen);
        let vals: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let point = Tensor::new(1, 6, vals, false).unwrap();
        let f = |tape: &Tape, x: &Tensor| {
            let y = tape.tanh(x)?;
            tape.reduce_mean(&y)
        };
        let report = grad_check(&f, &point, 1e-5, 1e-4).unwrap();
        assert!(report.passed(), "max_rel = {}", report.max_rel);
    }

    #[test]
    fn probe_error_on_non_finite_function() {
        let point = Tensor::new(1, 1, vec![0.0], false).unwrap();
        let f = |tape: &Tape, x: &Tensor| {
            // 1/x blows up near the probe at -step
            let y = tape.scale_const(x, 1.0)?;
            let v = y.item();
            let _ = tape;
            Tensor::new(1, 1, vec![1.0 / v], false)
        };
        assert!(matches!(
            grad_check(&f, &point, 1e-5, 1e-4),
            Err(Error::Probe(_))
        ));
    }
}
