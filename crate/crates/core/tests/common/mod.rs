#![allow(dead_code)]

use adasi_core::sfs::{z_direction, SfsHistory, SfsOracle, SfsProblem, ZTest};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integral of `f` over a finite `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth > 50 || b - a < 1e-12 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    if b <= a {
        return 0.0;
    }
    rec(f, a, b, tol, 0)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_problem(
    rng: &mut impl Rng,
    n: usize,
    p: usize,
    k: usize,
    beta: &[f64],
) -> SfsProblem {
    let x = DMatrix::from_fn(n, p, |_, _| normal(rng));
    let mut d = DVector::from_fn(n, |_, _| normal(rng));
    for (j, b) in beta.iter().enumerate() {
        d.axpy(*b, &x.column(j).into_owned(), 1.0);
    }
    SfsProblem::new(x, d, 1.0, k).unwrap()
}

/// Selection, z-test on the smallest selected feature, and its oracle.
pub struct SfsCase {
    pub problem: SfsProblem,
    pub history: SfsHistory,
    pub test: ZTest,
    pub oracle: SfsOracle,
}

pub fn sfs_case(rng: &mut impl Rng, n: usize, p: usize, k: usize) -> SfsCase {
    let problem = random_problem(rng, n, p, k, &[]);
    let history = problem.fit().unwrap();
    let j = history.selected()[0];
    let test = z_direction(&problem, &history, j).unwrap();
    let oracle = SfsOracle::new(&problem, &history, test.line.clone()).unwrap();
    SfsCase {
        problem,
        history,
        test,
        oracle,
    }
}
