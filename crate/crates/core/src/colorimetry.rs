//! sRGB to CIE L*a*b* (D65) conversion and grayscale luma.
//!
//! The pipeline is fixed: IEC 61966-2-1 sRGB decoding, the sRGB primaries
//! matrix to CIE XYZ, then CIE L*a*b* relative to the D65 reference white.
//! All arithmetic is done in `f64`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Identifier echoed into output metadata so results can be traced back to
/// the exact conversion that produced them.
pub const COLOR_PIPELINE_ID: &str = "srgb-iec61966-2-1/xyz-d65/cielab";

/// D65 reference white, 2° observer.
pub const WHITE_D65: [f64; 3] = [0.95047, 1.0, 1.08883];

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

const DELTA: f64 = 6.0 / 29.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RgbPixel {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbPixel {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub const fn gray(v: u8) -> Self {
        Self { r: v, g: v, b: v }
    }
}

impl From<image::Rgb<u8>> for RgbPixel {
    fn from(p: image::Rgb<u8>) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

impl From<RgbPixel> for image::Rgb<u8> {
    fn from(p: RgbPixel) -> Self {
        image::Rgb([p.r, p.g, p.b])
    }
}

/// A colour in CIE L*a*b* coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelLab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl PixelLab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }
}

/// How grayscale intensity is derived from an sRGB pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrayscaleMode {
    /// ITU-R BT.601 luma: `0.299 R + 0.587 G + 0.114 B`.
    #[default]
    Rec601,
    /// Unweighted mean of the three channels.
    ChannelMean,
}

impl GrayscaleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GrayscaleMode::Rec601 => "rec601",
            GrayscaleMode::ChannelMean => "channel_mean",
        }
    }
}

impl std::str::FromStr for GrayscaleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rec601" => Ok(GrayscaleMode::Rec601),
            "channel_mean" | "mean" => Ok(GrayscaleMode::ChannelMean),
            other => Err(format!("unknown grayscale mode `{other}`")),
        }
    }
}

/// sRGB electro-optical transfer function on a normalised channel value.
pub fn srgb_decode(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse of [`srgb_decode`].
pub fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn linear_table() -> &'static [f64; 256] {
    static TABLE: OnceLock<[f64; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; 256];
        for (i, v) in t.iter_mut().enumerate() {
            *v = srgb_decode(i as f64 / 255.0);
        }
        t
    })
}

fn lab_f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn srgb_to_lab(p: RgbPixel) -> PixelLab {
    let lut = linear_table();
    let rgb = [lut[p.r as usize], lut[p.g as usize], lut[p.b as usize]];
    let xyz = mul3(&SRGB_TO_XYZ, rgb);
    let fx = lab_f(xyz[0] / WHITE_D65[0]);
    let fy = lab_f(xyz[1] / WHITE_D65[1]);
    let fz = lab_f(xyz[2] / WHITE_D65[2]);
    PixelLab {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Converts Lab to non-quantised sRGB channel values on the 0..=255 scale.
/// Values outside that range mean the colour is out of gamut.
pub fn lab_to_srgb_f64(lab: PixelLab) -> [f64; 3] {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let xyz = [
        WHITE_D65[0] * lab_f_inv(fx),
        WHITE_D65[1] * lab_f_inv(fy),
        WHITE_D65[2] * lab_f_inv(fz),
    ];
    let lin = mul3(&XYZ_TO_SRGB, xyz);
    lin.map(|c| {
        // powf on a negative base is NaN; keep the sign so gamut checks still work
        let enc = if c < 0.0 { -srgb_encode(-c) } else { srgb_encode(c) };
        enc * 255.0
    })
}

/// Quantises Lab to 8-bit sRGB. The flag is set when any channel had to be
/// clamped into `0..=255`.
pub fn lab_to_srgb(lab: PixelLab) -> (RgbPixel, bool) {
    let ch = lab_to_srgb_f64(lab);
    let mut clamped = false;
    let q = ch.map(|c| {
        let r = c.round();
        if !(0.0..=255.0).contains(&r) || r.is_nan() {
            clamped = true;
        }
        if r.is_nan() {
            0u8
        } else {
            r.clamp(0.0, 255.0) as u8
        }
    });
    (RgbPixel::new(q[0], q[1], q[2]), clamped)
}

pub fn grayscale(p: RgbPixel, mode: GrayscaleMode) -> f64 {
    let (r, g, b) = (p.r as f64, p.g as f64, p.b as f64);
    match mode {
        GrayscaleMode::Rec601 => 0.299 * r + 0.587 * g + 0.114 * b,
        GrayscaleMode::ChannelMean => (r + g + b) / 3.0,
    }
}
