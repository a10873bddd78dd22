//! Scalar helpers and a small 3-vector.
//!
//! All transcendental functions go through `libm` so results are identical
//! on every target, with or without `std`.

use core::ops::{Add, Mul, Neg, Sub};

pub use core::f64::consts::PI;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}
#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x.clamp(-1.0, 1.0))
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}
#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}

/// `x` reduced into `[0, period)`.
#[inline]
pub fn wrap(x: f64, period: f64) -> f64 {
    let r = libm::fmod(x, period);
    let r = if r < 0.0 { r + period } else { r };
    if r >= period { 0.0 } else { r }
}

#[inline]
pub fn to_radians(deg: f64) -> f64 {
    deg * (PI / 180.0)
}
#[inline]
pub fn to_degrees(rad: f64) -> f64 {
    rad * (180.0 / PI)
}

#[inline]
pub fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// `exp(x^2) * erfc(x)` without overflow for large positive `x`.
pub fn erfcx(x: f64) -> f64 {
    if x < 10.0 {
        exp(x * x) * erfc(x)
    } else {
        // Asymptotic series; the sixth term is below 1e-13 relative for x >= 10.
        let inv2 = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..6 {
            term *= -((2 * k - 1) as f64) * inv2;
            sum += term;
        }
        sum / (x * sqrt(PI))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZENITH: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// Unit vector from a zenith angle and an azimuth (radians). The azimuth
    /// is measured in the horizontal plane from +x towards +y.
    pub fn from_angles(zenith: f64, azimuth: f64) -> Self {
        let s = sin(zenith);
        Vec3::new(s * cos(azimuth), s * sin(azimuth), cos(zenith))
    }

    pub fn from_angles_deg(zenith_deg: f64, azimuth_deg: f64) -> Self {
        Self::from_angles(to_radians(zenith_deg), to_radians(azimuth_deg))
    }

    /// (zenith, azimuth) in radians, azimuth in [0, 2pi).
    pub fn to_angles(self) -> (f64, f64) {
        let n = self.normalized();
        let zenith = acos(n.z);
        let mut azimuth = atan2(n.y, n.x);
        if azimuth < 0.0 {
            azimuth += 2.0 * PI;
        }
        (zenith, azimuth)
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn length(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn normalized(self) -> Vec3 {
        let l = self.length();
        if l > 0.0 {
            self * (1.0 / l)
        } else {
            self
        }
    }

    /// Rotation about the z axis.
    pub fn rotate_z(self, angle: f64) -> Vec3 {
        let (s, c) = (sin(angle), cos(angle));
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}
