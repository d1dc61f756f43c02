//! Adaptive Gauss–Kronrod (7/15) quadrature used as an independent oracle.
#![allow(clippy::excessive_precision)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to relative tolerance `rtol`, bisecting the interval with the
/// largest error estimate until the total estimate is small enough or the
/// subdivision budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> f64 {
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = kronrod(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let (mut total, mut err) = (v, e);
    while err > rtol * total.abs() && parts.len() < MAX_INTERVALS {
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, v0, e0) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (l, el) = kronrod(&f, lo, mid);
        let (r, er) = kronrod(&f, mid, hi);
        total += l + r - v0;
        err += el + er - e0;
        parts.push((lo, mid, l, el));
        parts.push((mid, hi, r, er));
    }
    parts.iter().map(|p| p.2).sum()
}

/// Moments of the conditional law of `u = b/σ` given the direction, which has
/// density proportional to `u exp(t u − u²/2)` on `u > 0`.
pub struct NormLaw {
    pub t: f64,
    shift: f64,
    lo: f64,
    hi: f64,
}

impl NormLaw {
    pub fn new(t: f64) -> Self {
        let (lo, hi) = if t > 0.0 {
            ((t - 40.0).max(0.0), t + 40.0)
        } else {
            (0.0, (80.0 / -t).min(40.0))
        };
        Self {
            t,
            shift: if t > 0.0 { 0.5 * t * t } else { 0.0 },
            lo,
            hi,
        }
    }

    fn weight(&self, u: f64) -> f64 {
        u * (self.t * u - 0.5 * u * u - self.shift).exp()
    }

    /// `ln ∫ g(u) u exp(tu − u²/2) du`, minus the shift.
    fn ln_integral<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let mut total = 0.0;
        // split around the mode for robustness
        let mode = 0.5 * (self.t + (self.t * self.t + 4.0).sqrt());
        let cuts = [self.lo, mode.clamp(self.lo, self.hi), self.hi];
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                total += integrate(|u| g(u) * self.weight(u), w[0], w[1], 1e-13);
            }
        }
        total.ln()
    }

    /// `ln[1 + t Φ(t)/φ(t)]`.
    pub fn ln_one_plus_mills(&self) -> f64 {
        self.ln_integral(|_| 1.0) + self.shift
    }

    pub fn moment(&self, g: impl Fn(f64) -> f64) -> f64 {
        (self.ln_integral(g) - self.ln_integral(|_| 1.0)).exp()
    }
}
