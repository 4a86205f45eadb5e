//! Plain scalar re-implementation of the ITA pipeline used as a reference.
//! Written without touching the library internals: its own transfer curve
//! (no lookup table), `powf` cube roots, and Welford running moments.

pub struct OracleResult {
    pub keep: Vec<bool>,
    pub ita_mean_of_means: Option<f64>,
    pub ita_mean_of_pixel_itas: Option<f64>,
}

fn to_linear(c: u8) -> f64 {
    let v = f64::from(c) / 255.0;
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn f(t: f64) -> f64 {
    let d = 6.0_f64 / 29.0;
    if t > d * d * d {
        t.powf(1.0 / 3.0)
    } else {
        t / (3.0 * d * d) + 4.0 / 29.0
    }
}

/// Returns (L, a, b).
pub fn lab(rgb: [u8; 3]) -> (f64, f64, f64) {
    let r = to_linear(rgb[0]);
    let g = to_linear(rgb[1]);
    let b = to_linear(rgb[2]);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let fx = f(x / 0.95047);
    let fy = f(y / 1.0);
    let fz = f(z / 1.08883);
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

fn ita(l: f64, b: f64) -> Option<f64> {
    if l == 50.0 && b == 0.0 {
        return None;
    }
    let deg = (l - 50.0).atan2(b) * 180.0 / std::f64::consts::PI;
    Some(if deg == -180.0 { 180.0 } else { deg })
}

/// Mean and population standard deviation by Welford's method.
fn moments(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    (mean, (m2 / xs.len() as f64).max(0.0).sqrt())
}

/// Joint one-sigma membership on L and b with an inclusive boundary
/// (relative slack 1e-12); zero-spread channels do not constrain; when
/// nothing survives, the minimal `max(|dL|/sdL, |db|/sdb)` pixels are kept.
pub fn membership(ls: &[f64], bs: &[f64], sigma: f64) -> Vec<bool> {
    let (ml, sl) = moments(ls);
    let (mb, sb) = moments(bs);
    let slack = 1.0 + 1e-12;
    let mut keep = vec![false; ls.len()];
    let mut any = false;
    for i in 0..ls.len() {
        let ok_l = sl == 0.0 || (ls[i] - ml).abs() <= sigma * sl * slack;
        let ok_b = sb == 0.0 || (bs[i] - mb).abs() <= sigma * sb * slack;
        keep[i] = ok_l && ok_b;
        any |= keep[i];
    }
    if any {
        return keep;
    }
    let score = |i: usize| {
        let zl = if sl == 0.0 { 0.0 } else { (ls[i] - ml).abs() / sl };
        let zb = if sb == 0.0 { 0.0 } else { (bs[i] - mb).abs() / sb };
        if zl > zb {
            zl
        } else {
            zb
        }
    };
    let mut best = f64::MAX;
    for i in 0..ls.len() {
        if score(i) < best {
            best = score(i);
        }
    }
    (0..ls.len()).map(|i| score(i) <= best).collect()
}

/// `pixels` and `excluded` are row-major. `None` means the region is empty.
pub fn estimate(pixels: &[[u8; 3]], excluded: &[bool], sigma: f64) -> Option<OracleResult> {
    let mut ls = Vec::new();
    let mut bs = Vec::new();
    for (p, &ex) in pixels.iter().zip(excluded) {
        if !ex {
            let (l, _, b) = lab(*p);
            ls.push(l);
            bs.push(b);
        }
    }
    if ls.is_empty() {
        return None;
    }
    let keep = membership(&ls, &bs, sigma);
    let mut n = 0.0;
    let (mut sum_l, mut sum_b, mut sum_ita) = (0.0, 0.0, Some(0.0));
    for i in 0..ls.len() {
        if keep[i] {
            n += 1.0;
            sum_l += ls[i];
            sum_b += bs[i];
            sum_ita = match (sum_ita, ita(ls[i], bs[i])) {
                (Some(s), Some(v)) => Some(s + v),
                _ => None,
            };
        }
    }
    Some(OracleResult {
        keep,
        ita_mean_of_means: ita(sum_l / n, sum_b / n),
        ita_mean_of_pixel_itas: sum_ita.map(|s| s / n),
    })
}
