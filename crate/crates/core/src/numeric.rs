//! Small numerical helpers: compensated summation and least-squares fits.

use serde::Serialize;

/// Neumaier-compensated accumulator. Summation order is the caller's order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn csum(iter: impl IntoIterator<Item = f64>) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = csum(xs.iter().copied()) / n as f64;
    let my = csum(ys.iter().copied()) / n as f64;
    let sxx = csum(xs.iter().map(|x| (x - mx) * (x - mx)));
    if sxx == 0.0 {
        return None;
    }
    let sxy = csum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Least-squares `y = c·x` through the origin.
pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let sxx = csum(xs.iter().map(|x| x * x));
    (sxx > 0.0).then(|| csum(xs.iter().zip(ys).map(|(x, y)| x * y)) / sxx)
}

/// `|a - b| / (1 + max(|a|, |b|))`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.25 * x - 3.0).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope - 0.25).abs() < 1e-15);
        assert!((fit.intercept + 3.0).abs() < 1e-14);
        assert!(fit_line(&[1.0], &[2.0]).is_none());
        assert_eq!(fit_through_origin(&[1.0, 2.0], &[3.0, 6.0]), Some(3.0));
    }
}
