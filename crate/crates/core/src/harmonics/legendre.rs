//! Fully normalized associated Legendre functions.
//!
//! `P̄_lm(cos c)` is normalized so that `Y_l0 = P̄_l0` and, for `m > 0`,
//! `Y_lm = √2 P̄_lm cos(mλ)` and `Y_l,-m = √2 P̄_lm sin(mλ)` are orthonormal
//! over the unit sphere. No Condon–Shortley phase is applied.

/// Offset of `(l, m)` in a lower-triangular table with `m = 0..=l`.
#[inline]
pub fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

#[inline]
pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Values of the normalized Legendre functions and the two derivative
/// combinations needed for surface gradients, at one colatitude.
#[derive(Debug, Clone)]
pub struct LegendreColumn {
    /// `P̄_lm(cos c)`.
    pub p: Vec<f64>,
    /// `d P̄_lm / dc`.
    pub dp: Vec<f64>,
    /// `m P̄_lm / sin c` (finite at the poles).
    pub mp_over_sin: Vec<f64>,
}

impl LegendreColumn {
    pub fn new(lmax: usize, colat: f64) -> Self {
        let n = tri_len(lmax);
        let mut col = LegendreColumn {
            p: vec![0.0; n],
            dp: vec![0.0; n],
            mp_over_sin: vec![0.0; n],
        };
        col.fill(lmax, colat);
        col
    }

    fn fill(&mut self, lmax: usize, colat: f64) {
        let x = colat.cos();
        let s = colat.sin();
        // q holds P̄_lm / sin(c) for m >= 1; it obeys the same recurrence in l.
        let mut q = vec![0.0; tri_len(lmax)];

        // Sectoral seeds: P̄_mm = s_m sin^m, with s_0 = 1/sqrt(4π).
        let mut seed = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
        let mut sin_pow_m_minus_1 = 1.0; // sin^(m-1) for m >= 1
        for m in 0..=lmax {
            if m > 0 {
                seed *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
                if m > 1 {
                    sin_pow_m_minus_1 *= s;
                }
            }
            let pmm = if m == 0 { seed } else { seed * sin_pow_m_minus_1 * s };
            let qmm = if m == 0 { 0.0 } else { seed * sin_pow_m_minus_1 };
            self.p[tri_index(m, m)] = pmm;
            q[tri_index(m, m)] = qmm;
            if m < lmax {
                let a = ((2 * m + 3) as f64).sqrt();
                self.p[tri_index(m + 1, m)] = a * x * pmm;
                q[tri_index(m + 1, m)] = a * x * qmm;
            }
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let i = tri_index(l, m);
                let i1 = tri_index(l - 1, m);
                let i2 = tri_index(l - 2, m);
                self.p[i] = a * (x * self.p[i1] - b * self.p[i2]);
                q[i] = a * (x * q[i1] - b * q[i2]);
            }
        }

        for l in 0..=lmax {
            for m in 0..=l {
                let i = tri_index(l, m);
                let lf = l as f64;
                let mf = m as f64;
                self.mp_over_sin[i] = mf * q[i];
                // Division-free derivative in c.
                self.dp[i] = if m == 0 {
                    if l == 0 {
                        0.0
                    } else {
                        -(lf * (lf + 1.0)).sqrt() * self.p[tri_index(l, 1)]
                    }
                } else {
                    let lower = ((lf + mf) * (lf - mf + 1.0)).sqrt() * self.p[tri_index(l, m - 1)];
                    let upper = if m < l {
                        ((lf + mf + 1.0) * (lf - mf)).sqrt() * self.p[tri_index(l, m + 1)]
                    } else {
                        0.0
                    };
                    0.5 * (lower - upper)
                };
            }
        }
    }
}
