/// Triangle rule in barycentric coordinates; weights sum to one and are
/// scaled by the element area at use.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Cheapest built-in rule exact for polynomials of the given degree.
    pub fn for_degree(degree: usize) -> QuadratureRule {
        match degree {
            0 | 1 => Self::centroid(),
            2 => Self::three_point(),
            3 | 4 => Self::dunavant6(),
            _ => Self::seven_point(),
        }
    }

    fn centroid() -> Self {
        Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
            degree: 1,
        }
    }

    fn three_point() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    fn dunavant6() -> Self {
        let a = 0.445_948_490_915_965;
        let wa = 0.223_381_589_678_011;
        let b = 0.091_576_213_509_771;
        let wb = 0.109_951_743_655_322;
        let (ca, cb) = (1.0 - 2.0 * a, 1.0 - 2.0 * b);
        Self {
            points: vec![[ca, a, a], [a, ca, a], [a, a, ca], [cb, b, b], [b, cb, b], [b, b, cb]],
            weights: vec![wa, wa, wa, wb, wb, wb],
            degree: 4,
        }
    }

    fn seven_point() -> Self {
        let (a1, b1, w1) = (0.059_715_871_789_770, 0.470_142_064_105_115, 0.132_394_152_788_506);
        let (a2, b2, w2) = (0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827);
        Self {
            points: vec![
                [1.0 / 3.0; 3],
                [a1, b1, b1],
                [b1, a1, b1],
                [b1, b1, a1],
                [a2, b2, b2],
                [b2, a2, b2],
                [b2, b2, a2],
            ],
            weights: vec![0.225, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }
}

/// Gauss–Legendre rule on [0, 1]; weights sum to one.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let raw: &[(f64, f64)] = match n {
        1 => &[(0.0, 2.0)],
        2 => &[(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)],
        3 => &[
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ],
        _ => &[
            (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
            (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        ],
    };
    raw.iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}
