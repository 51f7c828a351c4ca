//! Reference element stiffness matrices for unit Young's modulus.
//!
//! Local node `a = dx + 2·dy + 4·dz` sits at the element corner offset
//! `(dx, dy, dz) ∈ {0, 1}³`; DOF `c` of node `a` is row `a·ndim + c`.

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Dense row-major `8×8` plane-stress quadrilateral stiffness for an
/// element of size `hx × hy` and thickness `t`.
pub fn quad_stiffness(nu: f64, hx: f64, hy: f64, t: f64) -> Vec<f64> {
    let d = {
        let c = 1.0 / (1.0 - nu * nu);
        [[c, c * nu, 0.0], [c * nu, c, 0.0], [0.0, 0.0, c * 0.5 * (1.0 - nu)]]
    };
    let det_j = 0.25 * hx * hy;
    let mut k = vec![0.0; 64];
    for &xi in &GAUSS {
        for &eta in &GAUSS {
            // B is 3 x 8
            let mut b = [[0.0; 8]; 3];
            for a in 0..4 {
                let (sx, sy) = (sign(a & 1), sign((a >> 1) & 1));
                let dndx = 0.25 * sx * (1.0 + sy * eta) * 2.0 / hx;
                let dndy = 0.25 * sy * (1.0 + sx * xi) * 2.0 / hy;
                b[0][2 * a] = dndx;
                b[1][2 * a + 1] = dndy;
                b[2][2 * a] = dndy;
                b[2][2 * a + 1] = dndx;
            }
            accumulate(&mut k, &b, &d, det_j * t, 8);
        }
    }
    k
}

/// Dense row-major `24×24` trilinear hexahedron stiffness for an element of
/// size `hx × hy × hz`.
pub fn hex_stiffness(nu: f64, hx: f64, hy: f64, hz: f64) -> Vec<f64> {
    let lam = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = 1.0 / (2.0 * (1.0 + nu));
    let mut d = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = lam;
        }
        d[i][i] = lam + 2.0 * mu;
        d[i + 3][i + 3] = mu;
    }
    let det_j = 0.125 * hx * hy * hz;
    let mut k = vec![0.0; 24 * 24];
    for &xi in &GAUSS {
        for &eta in &GAUSS {
            for &zeta in &GAUSS {
                // strain order: xx, yy, zz, xy, yz, zx
                let mut b = [[0.0; 24]; 6];
                for a in 0..8 {
                    let (sx, sy, sz) = (sign(a & 1), sign((a >> 1) & 1), sign((a >> 2) & 1));
                    let dx = 0.125 * sx * (1.0 + sy * eta) * (1.0 + sz * zeta) * 2.0 / hx;
                    let dy = 0.125 * sy * (1.0 + sx * xi) * (1.0 + sz * zeta) * 2.0 / hy;
                    let dz = 0.125 * sz * (1.0 + sx * xi) * (1.0 + sy * eta) * 2.0 / hz;
                    let c = 3 * a;
                    b[0][c] = dx;
                    b[1][c + 1] = dy;
                    b[2][c + 2] = dz;
                    b[3][c] = dy;
                    b[3][c + 1] = dx;
                    b[4][c + 1] = dz;
                    b[4][c + 2] = dy;
                    b[5][c] = dz;
                    b[5][c + 2] = dx;
                }
                accumulate(&mut k, &b, &d, det_j, 24);
            }
        }
    }
    k
}

fn sign(bit: usize) -> f64 {
    if bit == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `k += w · Bᵀ D B`.
fn accumulate<const S: usize, const N: usize>(k: &mut [f64], b: &[[f64; N]; S], d: &[[f64; S]; S], w: f64, n: usize) {
    let mut db = [[0.0; N]; S];
    for i in 0..S {
        for j in 0..n {
            db[i][j] = (0..S).map(|m| d[i][m] * b[m][j]).sum();
        }
    }
    for r in 0..n {
        for c in 0..n {
            let v: f64 = (0..S).map(|m| b[m][r] * db[m][c]).sum();
            k[r * n + c] += w * v;
        }
    }
}
