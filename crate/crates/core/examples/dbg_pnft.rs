use pnft_core::pnft_forward::*;
use pnft_core::C64;

fn main() {
    let a = 1.0f64;
    let n = 1024;
    let t = 2.0 * std::f64::consts::PI;
    let q = vec![C64::new(a, 0.0); n];
    let dt = t / n as f64;
    let (nx, ny) = (30usize, 30usize);
    let (re_min, re_max, im_min, im_max) = (-1.0, 1.0, 0.0f64, a + 0.5);
    let xs: Vec<f64> = (0..nx).map(|i| re_min + (re_max - re_min) * i as f64 / (nx - 1) as f64).collect();
    let ys: Vec<f64> = (0..ny).map(|j| im_min.max(1e-3) + (im_max - im_min.max(1e-3)) * j as f64 / (ny - 1) as f64).collect();
    let mut vals = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let d = floquet_discriminant(&q, dt, C64::new(xs[i], ys[j])).unwrap();
            vals[j * nx + i] = (d * d - 1.0).norm();
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            let v = vals[j * nx + i];
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 { continue; }
                    let jj = j as i64 + dj; let ii = i as i64 + di;
                    if jj < 0 || jj >= ny as i64 || ii < 0 || ii >= nx as i64 { continue; }
                    if vals[jj as usize * nx + ii as usize] < v { is_min = false; }
                }
            }
            if is_min {
                println!("seed at ({:.4}, {:.4}) val {:.3e}", xs[i], ys[j], v);
            }
        }
    }
}
