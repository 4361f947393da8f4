//! Small numerically stable building blocks shared by the closed-form modules.

use num_complex::Complex64 as C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// sin(x)/x with the removable point handled.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// ∫_a^b e^{ipt} dt, evaluated in centred sinc form (no cancellation at small p).
pub fn seg_exp(p: f64, a: f64, b: f64) -> C64 {
    let h = b - a;
    C64::from_polar(h * sinc(0.5 * p * h), 0.5 * p * (a + b))
}

/// ∫_0^h u^n e^{imu} du.
pub fn moment(n: u32, m: f64, h: f64) -> C64 {
    let mh = m * h;
    if mh.abs() <= 6.0 {
        // power series in (imh)
        let mut sum = C64::new(0.0, 0.0);
        let mut pow = C64::new(h.powi(n as i32 + 1), 0.0); // (im)^k h^{n+k+1} / k!
        for k in 0..200u32 {
            let term = pow / f64::from(n + k + 1);
            sum += term;
            if k > 4 && term.norm() <= 1e-18 * sum.norm() {
                break;
            }
            pow = pow * I * mh / f64::from(k + 1);
        }
        sum
    } else {
        let e = C64::from_polar(1.0, mh);
        let mut acc = (e - 1.0) / (I * m);
        for k in 1..=n {
            acc = (e * h.powi(k as i32) - acc * f64::from(k)) / (I * m);
        }
        acc
    }
}

/// Divided difference ∫_0^h (e^{ip₁u} − e^{ip₂u}) / (i(p₁ − p₂)) du.
///
/// Reduces to ∫_0^h u e^{ipu} du when p₁ = p₂.
pub fn exp_divided_difference(p1: f64, p2: f64, h: f64) -> C64 {
    let d = p1 - p2;
    if (d * h).abs() >= 1e-3 {
        (seg_exp(p1, 0.0, h) - seg_exp(p2, 0.0, h)) / (I * d)
    } else {
        let m = 0.5 * (p1 + p2);
        let d2 = d * d;
        moment(1, m, h) - moment(3, m, h) * (d2 / 24.0) + moment(5, m, h) * (d2 * d2 / 1920.0)
    }
}

/// ∫_0^h (h − v) e^{ipv} dv.
pub fn ramp_exp(p: f64, h: f64) -> C64 {
    let ph = p * h;
    if ph.abs() < 0.5 {
        let mut sum = C64::new(0.0, 0.0);
        let mut pow = C64::new(h * h, 0.0); // (ip)^k h^{k+2}/k!
        for k in 0..60u32 {
            let term = pow / (f64::from(k + 1) * f64::from(k + 2));
            sum += term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
            pow = pow * I * ph / f64::from(k + 1);
        }
        sum
    } else {
        -(C64::from_polar(1.0, ph) - 1.0 - I * ph) / (p * p)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = KahanSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn logspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    linspace(start.ln(), stop.ln(), n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad<F: Fn(f64) -> C64>(f: F, a: f64, b: f64) -> C64 {
        // composite Simpson, fine enough for smooth test integrands
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += f(a + k as f64 * h) * w;
        }
        s * h / 3.0
    }

    #[test]
    fn seg_exp_matches_quadrature() {
        for &p in &[0.0, 1e-9, 0.3, -2.0, 17.0] {
            let q = quad(|t| C64::from_polar(1.0, p * t), 0.2, 1.7);
            assert!((seg_exp(p, 0.2, 1.7) - q).norm() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn moments_match_quadrature_on_both_branches() {
        for &m in &[0.0, 0.5, -3.0, 9.0, -40.0] {
            for n in 0..6 {
                let q = quad(|u| C64::from_polar(u.powi(n as i32), m * u), 0.0, 1.3);
                let v = moment(n, m, 1.3);
                assert!((v - q).norm() < 1e-9 * (1.0 + q.norm()), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn divided_difference_is_continuous_across_threshold() {
        let h = 0.8;
        for &p2 in &[0.0, 2.0, -5.0] {
            let a = exp_divided_difference(p2 + 1.0001e-3 / h, p2, h);
            let b = exp_divided_difference(p2 + 0.9999e-3 / h, p2, h);
            assert!((a - b).norm() < 1e-6 * a.norm());
            let exact = moment(1, p2, h);
            let same = exp_divided_difference(p2, p2, h);
            assert!((same - exact).norm() < 1e-15);
        }
    }

    #[test]
    fn ramp_exp_branches_agree() {
        for &h in &[0.1, 1.0] {
            let p = 0.4999 / h;
            let q = quad(|v| C64::from_polar(h - v, p * v), 0.0, h);
            assert!((ramp_exp(p, h) - q).norm() < 1e-10);
            let p = 0.5001 / h;
            let q = quad(|v| C64::from_polar(h - v, p * v), 0.0, h);
            assert!((ramp_exp(p, h) - q).norm() < 1e-10);
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
