//! Eigenvalues of a dense real matrix: balancing, reduction to upper
//! Hessenberg form by stabilized elimination, then Francis double-shift QR.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major square work matrix.
struct Work {
    n: usize,
    a: Vec<f64>,
}

impl Work {
    fn from(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = m[(i, j)];
            }
        }
        Work { n, a }
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        self.a[i as usize * self.n + j as usize]
    }

    #[inline]
    fn put(&mut self, i: isize, j: isize, v: f64) {
        let n = self.n;
        self.a[i as usize * n + j as usize] = v;
    }

    fn balance(&mut self) {
        const RADIX: f64 = 2.0;
        let sqrdx = RADIX * RADIX;
        let n = self.n as isize;
        let mut done = false;
        while !done {
            done = true;
            for i in 0..n {
                let mut r = 0.0;
                let mut c = 0.0;
                for j in 0..n {
                    if j != i {
                        c += self.at(j, i).abs();
                        r += self.at(i, j).abs();
                    }
                }
                if c != 0.0 && r != 0.0 {
                    let mut g = r / RADIX;
                    let mut f = 1.0;
                    let s = c + r;
                    while c < g {
                        f *= RADIX;
                        c *= sqrdx;
                    }
                    g = r * RADIX;
                    while c > g {
                        f /= RADIX;
                        c /= sqrdx;
                    }
                    if (c + r) / f < 0.95 * s {
                        done = false;
                        let g = 1.0 / f;
                        for j in 0..n {
                            self.put(i, j, self.at(i, j) * g);
                        }
                        for j in 0..n {
                            self.put(j, i, self.at(j, i) * f);
                        }
                    }
                }
            }
        }
    }

    fn hessenberg(&mut self) {
        let n = self.n as isize;
        for m in 1..n - 1 {
            let mut x = 0.0f64;
            let mut i = m;
            for j in m..n {
                if self.at(j, m - 1).abs() > x.abs() {
                    x = self.at(j, m - 1);
                    i = j;
                }
            }
            if i != m {
                for j in (m - 1)..n {
                    let t = self.at(i, j);
                    self.put(i, j, self.at(m, j));
                    self.put(m, j, t);
                }
                for j in 0..n {
                    let t = self.at(j, i);
                    self.put(j, i, self.at(j, m));
                    self.put(j, m, t);
                }
            }
            if x != 0.0 {
                for i in (m + 1)..n {
                    let mut y = self.at(i, m - 1);
                    if y != 0.0 {
                        y /= x;
                        self.put(i, m - 1, y);
                        for j in m..n {
                            self.put(i, j, self.at(i, j) - y * self.at(m, j));
                        }
                        for j in 0..n {
                            self.put(j, m, self.at(j, m) + y * self.at(j, i));
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..(i - 1).max(0) {
                self.put(i, j, 0.0);
            }
        }
    }

    fn hqr(&mut self) -> Result<Vec<Complex64>> {
        let n = self.n as isize;
        let eps = f64::EPSILON;
        let cap = 100 * self.n.max(1);
        let mut total = 0usize;
        let mut wr = vec![Complex64::new(0.0, 0.0); self.n];
        let mut anorm = 0.0;
        for i in 0..n {
            for j in (i - 1).max(0)..n {
                anorm += self.at(i, j).abs();
            }
        }
        let mut nn = n - 1;
        let mut t = 0.0;
        while nn >= 0 {
            let mut its = 0;
            loop {
                let mut l = nn;
                while l > 0 {
                    let mut s = self.at(l - 1, l - 1).abs() + self.at(l, l).abs();
                    if s == 0.0 {
                        s = anorm;
                    }
                    if self.at(l, l - 1).abs() <= eps * s {
                        self.put(l, l - 1, 0.0);
                        break;
                    }
                    l -= 1;
                }
                let mut x = self.at(nn, nn);
                if l == nn {
                    wr[nn as usize] = Complex64::new(x + t, 0.0);
                    nn -= 1;
                    break;
                }
                let mut y = self.at(nn - 1, nn - 1);
                let mut w = self.at(nn, nn - 1) * self.at(nn - 1, nn);
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        let mut lo = x + z;
                        let hi = x + z;
                        if z != 0.0 {
                            lo = x - w / z;
                        }
                        wr[(nn - 1) as usize] = Complex64::new(hi, 0.0);
                        wr[nn as usize] = Complex64::new(lo, 0.0);
                    } else {
                        wr[nn as usize] = Complex64::new(x + p, -z);
                        wr[(nn - 1) as usize] = Complex64::new(x + p, z);
                    }
                    nn -= 2;
                    break;
                }
                if total >= cap {
                    return Err(Error::NumericFailure(format!(
                        "QR iteration did not converge within {cap} sweeps"
                    )));
                }
                if its > 0 && its % 10 == 0 {
                    // exceptional shift
                    t += x;
                    for i in 0..=nn {
                        self.put(i, i, self.at(i, i) - x);
                    }
                    let s = self.at(nn, nn - 1).abs() + self.at(nn - 1, nn - 2).abs();
                    x = 0.75 * s;
                    y = x;
                    w = -0.4375 * s * s;
                }
                its += 1;
                total += 1;
                let mut m = nn - 2;
                let mut z;
                let (mut p, mut q, mut r);
                loop {
                    z = self.at(m, m);
                    let r0 = x - z;
                    let s0 = y - z;
                    p = (r0 * s0 - w) / self.at(m + 1, m) + self.at(m, m + 1);
                    q = self.at(m + 1, m + 1) - z - r0 - s0;
                    r = self.at(m + 2, m + 1);
                    let s = p.abs() + q.abs() + r.abs();
                    p /= s;
                    q /= s;
                    r /= s;
                    if m == l {
                        break;
                    }
                    let u = self.at(m, m - 1).abs() * (q.abs() + r.abs());
                    let v = p.abs() * (self.at(m - 1, m - 1).abs() + z.abs() + self.at(m + 1, m + 1).abs());
                    if u <= eps * v {
                        break;
                    }
                    m -= 1;
                }
                for i in m..nn - 1 {
                    self.put(i + 2, i, 0.0);
                    if i != m {
                        self.put(i + 2, i - 1, 0.0);
                    }
                }
                let mut k = m;
                while k < nn {
                    if k != m {
                        p = self.at(k, k - 1);
                        q = self.at(k + 1, k - 1);
                        r = 0.0;
                        if k + 1 != nn {
                            r = self.at(k + 2, k - 1);
                        }
                        x = p.abs() + q.abs() + r.abs();
                        if x != 0.0 {
                            p /= x;
                            q /= x;
                            r /= x;
                        }
                    }
                    let s = (p * p + q * q + r * r).sqrt().copysign(p);
                    if s != 0.0 {
                        if k == m {
                            if l != m {
                                self.put(k, k - 1, -self.at(k, k - 1));
                            }
                        } else {
                            self.put(k, k - 1, -s * x);
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for j in k..=nn {
                            let mut pp = self.at(k, j) + q * self.at(k + 1, j);
                            if k + 1 != nn {
                                pp += r * self.at(k + 2, j);
                                self.put(k + 2, j, self.at(k + 2, j) - pp * z);
                            }
                            self.put(k + 1, j, self.at(k + 1, j) - pp * y);
                            self.put(k, j, self.at(k, j) - pp * x);
                        }
                        let mmin = if nn < k + 3 { nn } else { k + 3 };
                        for i in l..=mmin {
                            let mut pp = x * self.at(i, k) + y * self.at(i, k + 1);
                            if k + 1 != nn {
                                pp += z * self.at(i, k + 2);
                                self.put(i, k + 2, self.at(i, k + 2) - pp * r);
                            }
                            self.put(i, k + 1, self.at(i, k + 1) - pp * q);
                            self.put(i, k, self.at(i, k) - pp);
                        }
                    }
                    k += 1;
                }
            }
        }
        Ok(wr)
    }
}

/// Complete spectrum of a square real matrix.
pub fn eigenvalues_of(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, not square",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericFailure("matrix has non-finite entries".into()));
    }
    if matrix.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut w = Work::from(matrix);
    w.balance();
    w.hessenberg();
    w.hqr()
}
