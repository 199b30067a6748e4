use std::f64::consts::PI;

/// Independent oracle: P1 minimization of the radial dual functional on
/// `[0, R]` with uniform nodes, closed by the radial exterior energy `2πRψ(R)²`.
pub fn radial_fd_minimum(beta: f64, k: f64, r_max: f64, nodes: usize) -> f64 {
    let n = nodes - 1;
    let h = r_max / n as f64;
    let vol = 4.0 * PI / 3.0;
    let r = |i: usize| i as f64 * h;
    let mut diag = vec![0.0; nodes];
    let mut off = vec![0.0; n];
    let mut w = vec![0.0; nodes];
    for e in 0..n {
        let (a, b) = (r(e), r(e + 1));
        let inside = b <= 1.0 + 1e-12;
        let coef = if inside { beta } else { 1.0 };
        let stiff = 4.0 * PI * coef * (b.powi(3) - a.powi(3)) / (3.0 * h * h);
        diag[e] += stiff;
        diag[e + 1] += stiff;
        off[e] -= stiff;
        if inside {
            // Products of the two P1 hats against r², by 6-point Gauss.
            let (x, wts) = droplet_core::sphere::gauss_legendre(6);
            let mut mm = [0.0; 3];
            for (xi, wi) in x.iter().zip(&wts) {
                let t = a + 0.5 * h * (xi + 1.0);
                let (pa, pb) = ((b - t) / h, (t - a) / h);
                let wt = 0.5 * h * wi * t * t;
                mm[0] += wt * pa * pa;
                mm[1] += wt * pa * pb;
                mm[2] += wt * pb * pb;
            }
            let s = 4.0 * PI / k;
            diag[e] += s * mm[0];
            diag[e + 1] += s * mm[2];
            off[e] += s * mm[1];
            w[e] += 4.0 * PI * (b * (b.powi(3) - a.powi(3)) / 3.0 - (b.powi(4) - a.powi(4)) / 4.0) / h;
            w[e + 1] += 4.0 * PI * ((b.powi(4) - a.powi(4)) / 4.0 - a * (b.powi(3) - a.powi(3)) / 3.0) / h;
        }
    }
    diag[n] += 4.0 * PI * r_max;
    let thomas = |rhs: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; nodes];
        let mut d = vec![0.0; nodes];
        c[0] = off[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..nodes {
            let m = diag[i] - off[i - 1] * c[i - 1];
            if i < n {
                c[i] = off[i] / m;
            }
            d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
        }
        let mut x = vec![0.0; nodes];
        x[n] = d[n];
        for i in (0..n).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    };
    // Minimize ½ψᵀAψ − (2|B|K)⁻¹(wᵀψ)² + |B|⁻¹wᵀψ.
    let rhs: Vec<f64> = w.iter().map(|x| -x / vol).collect();
    let y = thomas(&rhs);
    let z = thomas(&w);
    let sigma = 1.0 / (vol * k);
    let wy: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
    let wz: f64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
    let psi: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a + sigma * wy / (1.0 - sigma * wz) * b).collect();
    let s: f64 = w.iter().zip(&psi).map(|(a, b)| a * b).sum();
    // At the minimizer the quadratic part equals −½ of the linear part.
    0.5 * s / vol
}
