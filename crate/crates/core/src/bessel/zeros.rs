use super::BesselOrder;
use crate::error::{Error, Result};

/// First `count` positive zeros of `j_α` (equivalently of `J_α`).
///
/// Sign changes are bracketed on a scan of step 0.25 (zeros are spaced by
/// more than 2.5 for α > -1/2) and refined by safeguarded Newton steps using
/// `j_α' = -x j_{α+1} / (2(α+1))`.
pub fn kernel_zeros(order: &BesselOrder, count: usize) -> Result<Vec<f64>> {
    let next = BesselOrder::new(order.alpha + 1.0)?;
    let step = 0.25;
    let mut zeros = Vec::with_capacity(count);
    let mut lo = 0.0;
    let mut f_lo = 1.0;
    let limit = (count as f64 + order.alpha.abs() + 10.0) * std::f64::consts::PI * 2.0;
    while zeros.len() < count {
        let hi = lo + step;
        if hi > limit {
            return Err(Error::NotConverged(format!(
                "found only {} of {count} kernel zeros below {limit}",
                zeros.len()
            )));
        }
        let f_hi = order.eval(hi);
        if f_lo == 0.0 {
            zeros.push(lo);
        } else if f_lo * f_hi < 0.0 {
            zeros.push(refine(order, &next, lo, hi, f_lo)?);
        }
        lo = hi;
        f_lo = f_hi;
    }
    Ok(zeros)
}

fn refine(order: &BesselOrder, next: &BesselOrder, mut a: f64, mut b: f64, f_a: f64) -> Result<f64> {
    let sign_a = f_a.signum();
    let mut x = 0.5 * (a + b);
    for _ in 0..100 {
        let f = order.eval(x);
        if f == 0.0 {
            return Ok(x);
        }
        if f.signum() == sign_a {
            a = x;
        } else {
            b = x;
        }
        let df = -x / (2.0 * (order.alpha + 1.0)) * next.eval(x);
        let mut candidate = x - f / df;
        if !(candidate > a && candidate < b) {
            candidate = 0.5 * (a + b);
        }
        if (candidate - x).abs() <= 4.0 * f64::EPSILON * x {
            return Ok(candidate);
        }
        x = candidate;
    }
    Err(Error::NotConverged(format!("zero refinement stalled in [{a}, {b}]")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn half_order_zeros_are_multiples_of_pi() {
        let order = BesselOrder::new(0.5).unwrap();
        let z = kernel_zeros(&order, 50).unwrap();
        for (k, &q) in z.iter().enumerate() {
            assert!((q - (k + 1) as f64 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn order_zero_zeros() {
        let order = BesselOrder::new(0.0).unwrap();
        let z = kernel_zeros(&order, 3).unwrap();
        let known = [2.404_825_557_695_773, 5.520_078_110_286_311, 8.653_727_912_911_013];
        for (a, b) in z.iter().zip(known) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
