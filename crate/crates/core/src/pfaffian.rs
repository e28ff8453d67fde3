//! Pfaffian systems: derived systems and flags, characteristics, Frobenius
//! integrability and flag-system detection.

use rand::Rng;

use crate::algebra::{clear_vector, generic_rank_ratfunc, Field, Matrix, Poly, RatFunc, Rational};
use crate::error::{Error, Result};
use crate::forms::DiffForm;

/// A system of 1-forms on a named chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PfaffSystem {
    coords: Vec<String>,
    generators: Vec<DiffForm>,
}

impl PfaffSystem {
    pub fn new(coords: Vec<String>, generators: Vec<DiffForm>) -> Result<Self> {
        for g in &generators {
            if g.degree() != 1 {
                return Err(Error::Shape(format!("Pfaffian generators are 1-forms, got degree {}", g.degree())));
            }
            if let Some(v) = g.max_var() {
                if v >= coords.len() {
                    return Err(Error::ChartMismatch(format!("#{v}")));
                }
            }
        }
        Ok(PfaffSystem { coords, generators })
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn generators(&self) -> &[DiffForm] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn name(&self, i: usize) -> String {
        self.coords.get(i).cloned().unwrap_or_else(|| format!("#{i}"))
    }

    pub fn display_form(&self, w: &DiffForm) -> String {
        w.display_with(&|v| self.name(v))
    }

    /// Coefficient matrix, one row per generator.
    pub fn matrix(&self) -> Matrix<RatFunc> {
        let n = self.dim();
        Matrix::from_rows(n, self.generators.iter().map(|g| g.row(n).expect("checked 1-forms")).collect())
    }

    /// Drops generators that depend generically on earlier ones.
    pub fn independent(&self) -> PfaffSystem {
        let n = self.dim();
        let mut kept: Vec<DiffForm> = Vec::new();
        let mut rows: Vec<Vec<RatFunc>> = Vec::new();
        for g in &self.generators {
            let mut trial = rows.clone();
            trial.push(g.row(n).expect("checked 1-forms"));
            let r = generic_rank_ratfunc(&Matrix::from_rows(n, trial.clone())).expect("rank of a rational matrix");
            if r == trial.len() {
                rows = trial;
                kept.push(g.clone());
            }
        }
        PfaffSystem { coords: self.coords.clone(), generators: kept }
    }

    /// Generic rank of the coefficient matrix.
    pub fn rank(&self) -> usize {
        generic_rank_ratfunc(&self.matrix()).expect("rank of a rational matrix")
    }
}

/// `(rank, corank)`
pub fn rank_corank(s: &PfaffSystem) -> (usize, usize) {
    let r = s.rank();
    (r, s.dim() - r)
}

/// `{ω ∈ S : dω ≡ 0 mod S}` computed generically.
pub fn derived_system(s: &PfaffSystem) -> PfaffSystem {
    let s = s.independent();
    if s.generators.is_empty() {
        return s;
    }
    let kernel = s.matrix().kernel_basis();
    let d: Vec<DiffForm> = s.generators.iter().map(DiffForm::d).collect();
    let mut rows = Vec::new();
    for a in 0..kernel.len() {
        for b in a + 1..kernel.len() {
            rows.push(d.iter().map(|dw| dw.evaluate(&[kernel[a].clone(), kernel[b].clone()])).collect::<Vec<_>>());
        }
    }
    let s_len = s.generators.len();
    let combos: Vec<Vec<RatFunc>> = if rows.is_empty() {
        (0..s_len).map(|j| (0..s_len).map(|i| if i == j { RatFunc::one() } else { RatFunc::zero() }).collect()).collect()
    } else {
        Matrix::from_rows(s_len, rows).kernel_basis()
    };
    let generators = combos
        .iter()
        .map(|f| {
            let f = clear_vector(f);
            f.iter().zip(&s.generators).fold(DiffForm::zero(1), |acc, (c, w)| {
                if c.is_zero() {
                    acc
                } else {
                    acc.add(&w.scale(&RatFunc::from_poly(c.clone())))
                }
            })
        })
        .collect();
    PfaffSystem { coords: s.coords.clone(), generators }
}

/// The derived flag `S = S₀ ⊃ S₁ ⊃ …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedFlag {
    pub systems: Vec<PfaffSystem>,
    /// Ranks along the flag; a repeated last entry marks stabilization
    /// at nonzero rank.
    pub ranks: Vec<usize>,
    /// Number of strict rank drops.
    pub length: usize,
}

pub fn derived_flag(s: &PfaffSystem) -> DerivedFlag {
    let mut current = s.independent();
    let mut ranks = vec![current.generators.len()];
    let mut systems = vec![current.clone()];
    let mut length = 0;
    while !current.generators.is_empty() {
        let next = derived_system(&current).independent();
        let r = next.generators.len();
        ranks.push(r);
        systems.push(next.clone());
        if r == current.generators.len() {
            break;
        }
        length += 1;
        current = next;
    }
    DerivedFlag { systems, ranks, length }
}

/// Whether `S` is completely integrable.
pub fn frobenius_test(s: &PfaffSystem) -> bool {
    let s = s.independent();
    derived_system(&s).independent().generators.len() == s.generators.len()
}

/// Characteristic vectors at a point: `X ⌟ ω = 0` and `X ⌟ dω ≡ 0 mod S`.
pub fn characteristic_space(s: &PfaffSystem, at: &[Rational]) -> Result<Vec<Vec<Rational>>> {
    let n = s.dim();
    if at.len() != n {
        return Err(Error::Shape(format!("point has {} coordinates, chart has {n}", at.len())));
    }
    let s = s.independent();
    let singular = || Error::SingularPoint(format!("generators are undefined or dependent at ({})", join(at)));
    let w = s.matrix().eval(at)?.ok_or_else(singular)?;
    if w.rank() < s.generators.len() {
        return Err(singular());
    }
    let ker = w.kernel_basis();
    let mut rows = w.row_vecs();
    for g in &s.generators {
        let dg = g.d();
        let vals = dg.eval(at)?.ok_or_else(singular)?;
        for y in &ker {
            // row r with r·X = dω(X, Y)
            let mut r = vec![<Rational as Field>::zero(); n];
            for (idx, c) in &vals {
                let (i, j) = (idx[0], idx[1]);
                r[i] = &r[i] + c * &y[j];
                r[j] = &r[j] - c * &y[i];
            }
            rows.push(r);
        }
    }
    Ok(Matrix::from_rows(n, rows).kernel_basis())
}

fn join(v: &[Rational]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlagVerdict {
    Flag { length: usize },
    NotFlag { reason: String },
}

/// Flag-system test; characteristics are only checked at `samples` seeded points.
pub fn flag_classify(s: &PfaffSystem, samples: usize, rng: &mut impl Rng) -> FlagVerdict {
    let (_, corank) = rank_corank(s);
    if corank != 2 {
        return FlagVerdict::NotFlag { reason: format!("corank is {corank}, not 2") };
    }
    let flag = derived_flag(s);
    let r0 = flag.ranks[0];
    let expected: Vec<usize> = (0..=r0).rev().collect();
    if flag.ranks != expected {
        let ranks = flag.ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
        let reason = if flag.ranks.last() != Some(&0) {
            format!("derived ranks ({ranks}) stabilize before reaching 0")
        } else {
            format!("derived ranks ({ranks}) do not drop by one at each step")
        };
        return FlagVerdict::NotFlag { reason };
    }
    let mut checked = 0;
    let mut attempts = 0;
    while checked < samples && attempts < 20 * samples.max(1) {
        attempts += 1;
        let p: Vec<Rational> = (0..s.dim())
            .map(|_| Rational::new(rng.gen_range(-5i64..=5).into(), rng.gen_range(1i64..=4).into()))
            .collect();
        match characteristic_space(s, &p) {
            Ok(k) if k.is_empty() => checked += 1,
            Ok(k) => {
                return FlagVerdict::NotFlag {
                    reason: format!("characteristics of dimension {} at ({})", k.len(), join(&p)),
                }
            }
            Err(_) => continue,
        }
    }
    if checked < samples {
        return FlagVerdict::NotFlag { reason: "could not sample regular points".into() };
    }
    FlagVerdict::Flag { length: flag.length }
}

/// `{dy_i − y_{i+1} dx : 0 ≤ i < ℓ}` on `(x, y0, …, yℓ)`.
pub fn goursat_model(length: usize) -> PfaffSystem {
    let mut coords = vec!["x".to_string()];
    coords.extend((0..=length).map(|i| format!("y{i}")));
    let generators = (0..length)
        .map(|i| {
            DiffForm::d_coord(i + 1).sub(&DiffForm::d_coord(0).scale(&RatFunc::from_poly(Poly::var(i + 2))))
        })
        .collect();
    PfaffSystem { coords, generators }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn darboux() -> PfaffSystem {
        goursat_model(1)
    }

    fn closed(n: usize, which: &[usize]) -> PfaffSystem {
        let coords = (0..n).map(|i| format!("z{i}")).collect();
        PfaffSystem::new(coords, which.iter().map(|&i| DiffForm::d_coord(i)).collect()).unwrap()
    }

    #[test]
    fn derived_examples() {
        assert!(derived_system(&darboux()).generators().is_empty());
        let du = closed(2, &[1]);
        assert_eq!(derived_system(&du).generators().len(), 1);
        let g2 = goursat_model(2);
        let d = derived_system(&g2);
        assert_eq!(d.generators(), &g2.generators()[..1]);
    }

    #[test]
    fn flag_examples() {
        assert_eq!(derived_flag(&goursat_model(3)).ranks, vec![3, 2, 1, 0]);
        let f = derived_flag(&closed(4, &[2, 3]));
        assert_eq!((f.ranks, f.length), (vec![2, 2], 0));
        assert_eq!(derived_flag(&darboux()).ranks, vec![1, 0]);
    }

    #[test]
    fn rank_and_frobenius() {
        assert_eq!(rank_corank(&darboux()), (1, 2));
        assert_eq!(rank_corank(&closed(4, &[2, 3])), (2, 2));
        assert_eq!(rank_corank(&closed(3, &[])), (0, 3));
        assert!(frobenius_test(&closed(3, &[2])));
        assert!(!frobenius_test(&darboux()));
        let mut g = darboux().generators().to_vec();
        g.push(DiffForm::d_coord(2));
        assert!(frobenius_test(&PfaffSystem::new(names(&["x", "y", "z"]), g).unwrap()));
    }

    #[test]
    fn characteristics() {
        let origin = vec![rat(0, 1); 3];
        assert!(characteristic_space(&darboux(), &origin).unwrap().is_empty());
        assert_eq!(characteristic_space(&closed(3, &[2]), &origin).unwrap().len(), 2);
        assert!(characteristic_space(&goursat_model(2), &vec![rat(0, 1); 4]).unwrap().is_empty());
    }

    #[test]
    fn classification() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(flag_classify(&goursat_model(3), 5, &mut rng), FlagVerdict::Flag { length: 3 });
        assert_eq!(flag_classify(&darboux(), 5, &mut rng), FlagVerdict::Flag { length: 1 });
        assert!(matches!(flag_classify(&closed(4, &[2, 3]), 5, &mut rng), FlagVerdict::NotFlag { .. }));
    }
}
