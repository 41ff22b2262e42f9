//! Benchmark distributions with closed-form entries.

use crate::error::{Error, Result};
use crate::localfit::LocalModel;
use crate::model::{Distribution, Network, Scenario};
use crate::quantum::{born, presets};

fn three(outputs: usize, f: impl Fn(usize, usize, usize) -> f64) -> Distribution {
    Distribution::from_fn(Scenario::no_input(&[outputs; 3]), |_, a| f(a[0], a[1], a[2]))
        .expect("closed-form distribution is normalized")
}

/// Shared random bit on three parties.
pub fn ghz() -> Distribution {
    three(2, |a, b, c| if a == b && b == c { 0.5 } else { 0.0 })
}

/// Exactly one of three parties outputs 1.
pub fn w() -> Distribution {
    three(2, |a, b, c| if a + b + c == 1 { 1.0 / 3.0 } else { 0.0 })
}

/// `1/4 [1 + (-1)^{a+b+xy}]`.
pub fn pr_box() -> Distribution {
    Distribution::from_fn(Scenario::new(vec![(2, 2), (2, 2)]), |x, a| {
        if (a[0] + a[1] + x[0] * x[1]) % 2 == 0 {
            0.5
        } else {
            0.0
        }
    })
    .expect("PR box is normalized")
}

/// Triangle distribution built from maximal CHSH statistics: the outputs are
/// `2x + a`, `2y + b` and `2x + y`, with `x`, `y` uniform.
pub fn fritz() -> Distribution {
    let hi = (2.0 + std::f64::consts::SQRT_2) / 32.0;
    let lo = (2.0 - std::f64::consts::SQRT_2) / 32.0;
    three(4, |ta, tb, tc| {
        let (x, a) = (ta / 2, ta % 2);
        let (y, b) = (tb / 2, tb % 2);
        if tc != 2 * x + y {
            return 0.0;
        }
        if (a + b + x * y) % 2 == 0 {
            hi
        } else {
            lo
        }
    })
}

/// Triangle distribution of the elegant joint measurement on singlets.
/// Outcomes are labelled 0..3.
pub fn elegant_dist() -> Distribution {
    three(4, |a, b, c| {
        if a == b && b == c {
            25.0 / 256.0
        } else if a == b || b == c || a == c {
            1.0 / 256.0
        } else {
            5.0 / 256.0
        }
    })
}

/// Four-outcome triangle family with parameter `c` in `[-1, 1]`.
pub fn rgb4(c: f64) -> Result<Distribution> {
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::InvalidArgument(format!("rgb4 parameter {c} outside [-1, 1]")));
    }
    let s = (1.0 - c * c).max(0.0).sqrt();
    let base: [((usize, usize, usize), f64); 8] = [
        ((0, 1, 2), c * c / 8.0),
        ((1, 0, 3), c * c / 8.0),
        ((1, 0, 2), s * s / 8.0),
        ((0, 1, 3), s * s / 8.0),
        ((2, 2, 2), (s.powi(3) + c.powi(3)).powi(2) / 8.0),
        ((3, 3, 3), (s.powi(3) - c.powi(3)).powi(2) / 8.0),
        ((2, 2, 3), (c * c * s - c * s * s).powi(2) / 8.0),
        ((2, 3, 3), (c * c * s + c * s * s).powi(2) / 8.0),
    ];
    let mut probs = vec![0.0; 64];
    for ((a, b, cc), v) in base {
        // cyclic shifts (a,b,c) -> (b,c,a) -> (c,a,b); fixed points set once
        for (x, y, z) in [(a, b, cc), (b, cc, a), (cc, a, b)] {
            probs[x * 16 + y * 4 + z] = v;
        }
    }
    Distribution::from_computed(Scenario::no_input(&[4, 4, 4]), probs)
}

/// `p [000] + q [111] + (1-p-q)/6` on each of the six mixed outcomes.
pub fn p_pq(p: f64, q: f64) -> Result<Distribution> {
    if p < 0.0 || q < 0.0 || p + q > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!("need p, q >= 0 and p + q <= 1, got ({p}, {q})")));
    }
    let rest = ((1.0 - p - q) / 6.0).max(0.0);
    Distribution::from_fn(Scenario::no_input(&[2, 2, 2]), |_, a| match a[0] + a[1] + a[2] {
        0 => p,
        3 => q,
        _ => rest,
    })
}

/// Triangle with Bell state measurements on `|phi+>` pairs, together with a
/// triangle-local model reproducing it: every source sends a uniform symbol in
/// `0..4`, A outputs the symbol from its source shared with C, B the symbol
/// shared with C, and C their bitwise XOR.
pub fn bsm_triangle() -> Result<(Distribution, LocalModel)> {
    let d = born(&presets::triangle_bsm()?)?;
    Ok((d, bsm_triangle_model()))
}

pub fn bsm_triangle_model() -> LocalModel {
    let net = Network::triangle(4);
    // party sources in declaration order: A (beta, gamma), B (alpha, gamma), C (alpha, beta)
    LocalModel::deterministic(
        &net,
        vec![4, 4, 4],
        vec![vec![0.25; 4]; 3],
        |j, _x, lam| match j {
            0 => lam[0],
            1 => lam[0],
            _ => lam[0] ^ lam[1],
        },
    )
    .expect("bsm triangle model is well formed")
}

/// Uniform distribution over independent outputs.
pub fn uniform(outputs: &[usize]) -> Distribution {
    Distribution::uniform(Scenario::no_input(outputs))
}

/// Registry used by the CLI.
pub fn by_name(name: &str) -> Result<Distribution> {
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}' in '{name}'")));
    match name {
        "ghz" => Ok(ghz()),
        "w" => Ok(w()),
        "fritz" => Ok(fritz()),
        "elegant" => Ok(elegant_dist()),
        "pr" => Ok(pr_box()),
        "bsm-triangle" => Ok(bsm_triangle()?.0),
        "uniform" | "uniform3" => Ok(uniform(&[2, 2, 2])),
        other => {
            let parts: Vec<&str> = other.split(':').collect();
            match parts.as_slice() {
                ["rgb4", c] => rgb4(num(c)?),
                ["ppq", p, q] => p_pq(num(p)?, num(q)?),
                _ => Err(Error::UnknownName(other.to_string())),
            }
        }
    }
}

pub const NAMES: &[&str] = &["ghz", "w", "fritz", "elegant", "rgb4:<c>", "pr", "ppq:<p>:<q>", "bsm-triangle", "uniform"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{marginal, no_signaling_check};

    #[test]
    fn ghz_and_w_entries() {
        assert_eq!(ghz().p(&[0, 0, 0], &[0, 0, 0]), 0.5);
        assert_eq!(ghz().p(&[0, 0, 0], &[0, 0, 1]), 0.0);
        assert_eq!(w().p(&[0, 0, 0], &[1, 0, 0]), 1.0 / 3.0);
        assert_eq!(w().p(&[0, 0, 0], &[1, 1, 0]), 0.0);
        let m = marginal(&w(), &[0], &[0, 0, 0]).unwrap();
        assert!((m.probs[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.probs[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fritz_matches_printed_support() {
        let d = fritz();
        let hi = (2.0 + std::f64::consts::SQRT_2) / 32.0;
        let lo = (2.0 - std::f64::consts::SQRT_2) / 32.0;
        let his = [[0, 0, 0], [1, 1, 0], [0, 2, 1], [1, 3, 1], [2, 0, 2], [3, 1, 2], [2, 3, 3], [3, 2, 3]];
        let los = [[0, 1, 0], [1, 0, 0], [0, 3, 1], [1, 2, 1], [2, 1, 2], [3, 0, 2], [2, 2, 3], [3, 3, 3]];
        let x = [0, 0, 0];
        for a in his {
            assert!((d.p(&x, &a) - hi).abs() < 1e-15);
        }
        for a in los {
            assert!((d.p(&x, &a) - lo).abs() < 1e-15);
        }
        let nonzero = d.probs.iter().filter(|&&p| p > 0.0).count();
        assert_eq!(nonzero, 16);
    }

    #[test]
    fn elegant_entries() {
        let d = elegant_dist();
        assert_eq!(d.p(&[0, 0, 0], &[0, 0, 0]), 25.0 / 256.0);
        assert_eq!(d.p(&[0, 0, 0], &[0, 0, 1]), 1.0 / 256.0);
        assert_eq!(d.p(&[0, 0, 0], &[1, 0, 0]), 1.0 / 256.0);
        assert_eq!(d.p(&[0, 0, 0], &[0, 1, 2]), 5.0 / 256.0);
    }

    #[test]
    fn rgb4_special_values() {
        let one = rgb4(1.0).unwrap();
        assert!((one.p(&[0; 3], &[0, 1, 2]) - 0.125).abs() < 1e-15);
        assert!((one.p(&[0; 3], &[2, 2, 2]) - 0.125).abs() < 1e-15);
        assert!((one.p(&[0; 3], &[3, 3, 3]) - 0.125).abs() < 1e-15);
        let zero = rgb4(0.0).unwrap();
        assert_eq!(zero.p(&[0; 3], &[0, 1, 2]), 0.0);
        assert!((zero.p(&[0; 3], &[1, 0, 2]) - 0.125).abs() < 1e-15);
        let s: f64 = rgb4(0.9).unwrap().probs.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(rgb4(1.2).is_err());
    }

    #[test]
    fn ppq_corners() {
        assert_eq!(p_pq(0.5, 0.5).unwrap().probs, ghz().probs);
        let mixed = p_pq(0.0, 0.0).unwrap();
        assert_eq!(mixed.probs[0], 0.0);
        assert!((mixed.probs[1] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(p_pq(1.0, 0.0).unwrap().probs[0], 1.0);
        assert!(p_pq(0.7, 0.5).is_err());
    }

    #[test]
    fn pr_box_entries() {
        let d = pr_box();
        assert_eq!(d.p(&[1, 1], &[0, 0]), 0.0);
        assert_eq!(no_signaling_check(&d, 0.0).max_deviation, 0.0);
    }

    #[test]
    fn registry_parses_parameters() {
        assert!(by_name("rgb4:0.5").is_ok());
        assert!(by_name("ppq:0.2:0.3").is_ok());
        assert!(by_name("ppq:0.2").is_err());
        assert!(by_name("nope").is_err());
    }
}
