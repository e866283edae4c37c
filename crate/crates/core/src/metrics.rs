//! Fit statistics: mean squared error, variance accounted for, averages.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::series::Series;

fn check_shapes(y: &Series, yhat: &Series) -> Result<()> {
    if y.dim() != yhat.dim() || y.len() != yhat.len() {
        return Err(Error::Dimension(format!(
            "y is {}x{}, yhat is {}x{}",
            y.len(),
            y.dim(),
            yhat.len(),
            yhat.dim()
        )));
    }
    if y.is_empty() {
        return Err(Error::Empty { what: "series" });
    }
    Ok(())
}

/// `(1/N) Σ_t |y(t) − ŷ(t)|²`.
pub fn mse(y: &Series, yhat: &Series) -> Result<f64> {
    check_shapes(y, yhat)?;
    let sum: f64 = y.as_slice().iter().zip(yhat.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / y.len() as f64)
}

fn variance(values: impl Iterator<Item = f64> + Clone, len: usize) -> f64 {
    let mean = values.clone().sum::<f64>() / len as f64;
    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64
}

/// `100 · max{0, 1 − var(yᵢ − ŷᵢ) / var(yᵢ)}` per component.
pub fn vaf_components(y: &Series, yhat: &Series) -> Result<Vec<f64>> {
    check_shapes(y, yhat)?;
    let (dim, len) = (y.dim(), y.len());
    (0..dim)
        .map(|i| {
            let yi = y.as_slice().iter().skip(i).step_by(dim).copied();
            let ri = y
                .as_slice()
                .iter()
                .zip(yhat.as_slice())
                .skip(i)
                .step_by(dim)
                .map(|(a, b)| a - b);
            let var_y = variance(yi, len);
            if !(var_y > 0.0) {
                return Err(Error::UndefinedVaf { component: i });
            }
            Ok(100.0 * (1.0 - variance(ri, len) / var_y).max(0.0))
        })
        .collect()
}

/// Arithmetic mean.
pub fn average_stats(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty { what: "statistics" });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
