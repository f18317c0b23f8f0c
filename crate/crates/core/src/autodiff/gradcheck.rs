//! Central finite-difference verification of analytic gradients.

use super::tensor::Tensor;
use super::KernelError;

/// Outcome of a finite-difference sweep over parameter tensors.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// max over entries of |a - n| / max(1e-8, |a| + |n|).
    pub max_rel_err: f64,
    /// (tensor name, flat index, analytic, numeric) of the worst entry.
    pub worst: Option<(String, usize, f64, f64)>,
    pub entries_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

/// Compares the analytic gradients already accumulated in `params` against
/// central differences of `objective`, which must re-evaluate the scalar
/// objective from the tensors' current values (same rng seed, same neighbor
/// sample on every call). Values are restored after each probe. The error
/// type is generic so callers can thread their own error through the
/// objective.
pub fn finite_difference_check<F, E>(
    params: &[(String, Tensor)],
    mut objective: F,
    epsilon: f64,
) -> Result<GradCheckReport, E>
where
    F: FnMut() -> Result<f64, E>,
    E: From<KernelError>,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(KernelError::EpsilonOutOfRange(epsilon).into());
    }
    let base1 = objective()?;
    let base2 = objective()?;
    if base1.to_bits() != base2.to_bits() {
        return Err(KernelError::NonDeterministicFunction(base1, base2).into());
    }

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        entries_checked: 0,
    };
    for (name, tensor) in params {
        for idx in 0..tensor.len() {
            let original = tensor.value_at(idx);
            tensor.set_value_at(idx, original + epsilon);
            let plus = objective()?;
            tensor.set_value_at(idx, original - epsilon);
            let minus = objective()?;
            tensor.set_value_at(idx, original);

            let numeric = (plus - minus) / (2.0 * epsilon);
            let analytic = tensor.grad_at(idx);
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            report.entries_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = Some((name.clone(), idx, analytic, numeric));
            }
        }
    }
    Ok(report)
}
