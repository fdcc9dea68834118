//! sRGB, CIE Lab and LCh conversions plus circular hue arithmetic.
//!
//! RGB values are sRGB-companded reflectances in `[0, 1]`. Lab uses the D65
//! white point, with the reference white taken as the image of RGB white under
//! the sRGB matrix so that `(1, 1, 1)` maps to `L = 100, a = b = 0` exactly.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::geom::linalg::invert;

/// Chroma below this is treated as achromatic (hue-free).
pub const ACHROMATIC_CHROMA: f64 = 1e-8;

/// Largest chroma reached inside the sRGB gamut, used to normalize `C` to `~[0, 1]`.
pub const MAX_SRGB_CHROMA: f64 = 134.0;

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgbColor {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl RgbColor {
    pub const BLACK: RgbColor = RgbColor::new(0.0, 0.0, 0.0);
    pub const WHITE: RgbColor = RgbColor::new(1.0, 1.0, 1.0);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        RgbColor { r, g, b }
    }

    pub fn from_array(c: [f64; 3]) -> Self {
        RgbColor::new(c[0], c[1], c[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_u8(c: [u8; 3]) -> Self {
        RgbColor::new(c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0)
    }

    pub fn to_u8(self) -> [u8; 3] {
        let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        [q(self.r), q(self.g), q(self.b)]
    }

    /// Closest point of the unit RGB cube.
    pub fn clamped(self) -> Self {
        RgbColor::new(
            self.r.clamp(0.0, 1.0),
            self.g.clamp(0.0, 1.0),
            self.b.clamp(0.0, 1.0),
        )
    }

    pub fn in_gamut(self) -> bool {
        [self.r, self.g, self.b]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.g.is_finite() && self.b.is_finite()
    }

    pub fn to_lab(self) -> LabColor {
        rgb_to_lab(self)
    }

    pub fn to_lch(self) -> LchColor {
        rgb_to_lch(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// Cylindrical Lab. `h` is in degrees, normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LchColor {
    pub l: f64,
    pub c: f64,
    pub h: f64,
}

impl LchColor {
    pub fn new(l: f64, c: f64, h: f64) -> Self {
        LchColor {
            l,
            c,
            h: normalize_hue(h),
        }
    }

    pub fn is_achromatic(&self) -> bool {
        self.c < ACHROMATIC_CHROMA
    }

    /// Same lightness and chroma, hue replaced.
    pub fn with_hue(self, h: f64) -> Self {
        LchColor {
            l: self.l,
            c: self.c,
            h: normalize_hue(h),
        }
    }

    pub fn to_lab(self) -> LabColor {
        let rad = self.h.to_radians();
        LabColor {
            l: self.l,
            a: self.c * rad.cos(),
            b: self.c * rad.sin(),
        }
    }

    /// Lightness scaled to `[0, 1]`.
    pub fn norm_l(&self) -> f64 {
        self.l / 100.0
    }

    /// Chroma scaled by the sRGB maximum, roughly `[0, 1]`.
    pub fn norm_c(&self) -> f64 {
        self.c / MAX_SRGB_CHROMA
    }
}

fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn mat_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Exact inverse of [`RGB_TO_XYZ`] so that RGB white survives a round trip.
fn xyz_to_rgb() -> &'static [[f64; 3]; 3] {
    static INV: OnceLock<[[f64; 3]; 3]> = OnceLock::new();
    INV.get_or_init(|| {
        let flat: Vec<f64> = RGB_TO_XYZ.iter().flatten().copied().collect();
        let inv = invert(3, &flat).expect("sRGB matrix is invertible");
        [
            [inv[0], inv[1], inv[2]],
            [inv[3], inv[4], inv[5]],
            [inv[6], inv[7], inv[8]],
        ]
    })
}

fn white_xyz() -> [f64; 3] {
    mat_mul(&RGB_TO_XYZ, [1.0, 1.0, 1.0])
}

fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

pub fn rgb_to_lab(c: RgbColor) -> LabColor {
    let lin = [srgb_to_linear(c.r), srgb_to_linear(c.g), srgb_to_linear(c.b)];
    let xyz = mat_mul(&RGB_TO_XYZ, lin);
    let w = white_xyz();
    let fx = lab_f(xyz[0] / w[0]);
    let fy = lab_f(xyz[1] / w[1]);
    let fz = lab_f(xyz[2] / w[2]);
    LabColor {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Unclamped inverse of [`rgb_to_lab`].
pub fn lab_to_rgb_unclamped(lab: LabColor) -> RgbColor {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let w = white_xyz();
    let xyz = [lab_f_inv(fx) * w[0], lab_f_inv(fy) * w[1], lab_f_inv(fz) * w[2]];
    let lin = mat_mul(xyz_to_rgb(), xyz);
    // powf of a negative linear value is NaN; mirror the curve instead.
    let enc = |v: f64| v.signum() * linear_to_srgb(v.abs());
    RgbColor::new(enc(lin[0]), enc(lin[1]), enc(lin[2]))
}

pub fn rgb_to_lch(c: RgbColor) -> LchColor {
    let lab = rgb_to_lab(c);
    let chroma = lab.a.hypot(lab.b);
    let h = if chroma < ACHROMATIC_CHROMA {
        0.0
    } else {
        normalize_hue(lab.b.atan2(lab.a).to_degrees())
    };
    LchColor { l: lab.l, c: chroma, h }
}

/// Converts back to RGB, clamping to the cube. The flag is `true` when the
/// color was out of gamut before clamping.
pub fn lch_to_rgb(c: LchColor) -> (RgbColor, bool) {
    let rgb = lab_to_rgb_unclamped(c.to_lab());
    const SLACK: f64 = 1e-9;
    let out = !rgb.is_finite()
        || [rgb.r, rgb.g, rgb.b]
            .iter()
            .any(|v| *v < -SLACK || *v > 1.0 + SLACK);
    let rgb = if rgb.is_finite() {
        rgb.clamped()
    } else {
        RgbColor::BLACK
    };
    (rgb, out)
}

/// Largest chroma at the given lightness and hue that stays inside the sRGB
/// cube, capped at `c_max`.
pub fn max_in_gamut_chroma(l: f64, h: f64, c_max: f64) -> f64 {
    let in_gamut = |c: f64| !lch_to_rgb(LchColor { l, c, h }).1;
    if in_gamut(c_max) {
        return c_max;
    }
    if !in_gamut(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, c_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if in_gamut(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Maps any finite angle to `[0, 360)`.
pub fn normalize_hue(h: f64) -> f64 {
    let r = h.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Unsigned distance around the hue circle, in `[0, 180]`.
pub fn hue_arc_distance(h1: f64, h2: f64) -> f64 {
    let d = (h1 - h2).abs().rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Signed shortest rotation taking `from` onto `to`, in `(-180, 180]`.
pub fn signed_hue_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}
