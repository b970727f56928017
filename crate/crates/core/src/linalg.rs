//! Dense 3×3 complex linear algebra for the steady-state coherence system.

use num_complex::Complex64 as C64;

pub type Vec3 = [C64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[C64; 3]; 3]);

impl Mat3 {
    pub fn zeros() -> Self {
        Mat3([[C64::new(0.0, 0.0); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let mut out = [C64::new(0.0, 0.0); 3];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..3)
            .map(|j| (0..3).map(|i| self.0[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// LU factorisation with partial pivoting. `None` when a pivot is exactly zero.
    pub fn lu(&self) -> Option<Lu3> {
        let mut a = self.0;
        let mut perm = [0usize, 1, 2];
        for k in 0..3 {
            let p = (k..3)
                .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
                .unwrap();
            if a[p][k].norm() == 0.0 {
                return None;
            }
            a.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..3 {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for j in k + 1..3 {
                    let t = a[k][j];
                    a[i][j] -= f * t;
                }
            }
        }
        Some(Lu3 { a, perm })
    }
}

pub struct Lu3 {
    a: [[C64; 3]; 3],
    perm: [usize; 3],
}

impl Lu3 {
    pub fn solve(&self, b: &Vec3) -> Vec3 {
        let a = &self.a;
        let mut y = [b[self.perm[0]], b[self.perm[1]], b[self.perm[2]]];
        for i in 1..3 {
            for j in 0..i {
                let t = a[i][j] * y[j];
                y[i] -= t;
            }
        }
        for i in (0..3).rev() {
            for j in i + 1..3 {
                let t = a[i][j] * y[j];
                y[i] -= t;
            }
            y[i] /= a[i][i];
        }
        y
    }

    pub fn inverse(&self) -> Mat3 {
        let mut inv = Mat3::zeros();
        for j in 0..3 {
            let mut e = [C64::new(0.0, 0.0); 3];
            e[j] = C64::new(1.0, 0.0);
            let col = self.solve(&e);
            for i in 0..3 {
                inv.0[i][j] = col[i];
            }
        }
        inv
    }
}

pub fn vec_norm(v: &Vec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn solves_permuted_system() {
        let m = Mat3([
            [c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)],
            [c(1.0, -1.0), c(0.0, 0.0), c(0.0, 3.0)],
            [c(4.0, 0.0), c(1.0, 1.0), c(-2.0, 0.5)],
        ]);
        let x = [c(1.0, 2.0), c(-0.5, 0.0), c(0.25, -1.0)];
        let b = m.mul_vec(&x);
        let got = m.lu().unwrap().solve(&b);
        for i in 0..3 {
            assert!((got[i] - x[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = Mat3([
            [c(-0.1, 0.3), c(0.0, 0.35), c(0.0, 0.5)],
            [c(0.0, 0.35), c(-0.1, 0.0), c(0.0, 0.05)],
            [c(0.0, 0.5), c(0.0, -0.05), c(-0.2, 0.3)],
        ]);
        let inv = m.lu().unwrap().inverse();
        for j in 0..3 {
            let col = [inv.0[0][j], inv.0[1][j], inv.0[2][j]];
            let e = m.mul_vec(&col);
            for i in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e[i] - c(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_matrix_has_no_lu() {
        let mut m = Mat3::identity();
        m.0[2][2] = c(0.0, 0.0);
        assert!(m.lu().is_none());
    }
}
