//! Simplex quadrature by collapsed (Duffy) tensor products of Gauss–Legendre
//! rules. Exact for polynomials up to the requested degree on segments,
//! triangles and tetrahedra.

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = 0.5 * (z + 1.0);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Points in barycentric coordinates and weights summing to one, so that
/// `∫_K f ≈ |K| Σ w_q f(x_q)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub bary: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn simplex(dim: usize, degree: usize) -> Self {
        let n = (degree + dim).div_ceil(2);
        let (x, w) = gauss_legendre(n.max(1));
        let mut bary = Vec::new();
        let mut weights = Vec::new();
        match dim {
            0 => {
                bary.push([1.0, 0.0, 0.0, 0.0]);
                weights.push(1.0);
            }
            1 => {
                for (xi, wi) in x.iter().zip(&w) {
                    bary.push([1.0 - xi, *xi, 0.0, 0.0]);
                    weights.push(*wi);
                }
            }
            2 => {
                for (u, wu) in x.iter().zip(&w) {
                    for (v, wv) in x.iter().zip(&w) {
                        let s = u;
                        let t = v * (1.0 - u);
                        bary.push([1.0 - s - t, *s, t, 0.0]);
                        weights.push(2.0 * wu * wv * (1.0 - u));
                    }
                }
            }
            3 => {
                for (u, wu) in x.iter().zip(&w) {
                    for (v, wv) in x.iter().zip(&w) {
                        for (z, wz) in x.iter().zip(&w) {
                            let s = u;
                            let t = v * (1.0 - u);
                            let r = z * (1.0 - u) * (1.0 - v);
                            bary.push([1.0 - s - t - r, *s, t, r]);
                            weights.push(6.0 * wu * wv * wz * (1.0 - u).powi(2) * (1.0 - v));
                        }
                    }
                }
            }
            _ => panic!("unsupported simplex dimension {dim}"),
        }
        Self { dim, bary, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
