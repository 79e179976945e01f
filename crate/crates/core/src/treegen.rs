//! Complete Δ-ary trees and Galton-Watson samples.

use rand::Rng;

use crate::distributions::OffspringDistribution;
use crate::error::{Error, Result};
use crate::model::{RootedTree, TreeBuilder, Vertex};

pub const DEFAULT_MAX_VERTICES: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeSpec {
    DeltaAry {
        arity: usize,
        height: usize,
    },
    GaltonWatson {
        offspring: OffspringDistribution,
        height: usize,
        max_vertices: usize,
    },
}

impl TreeSpec {
    pub fn delta_ary(arity: usize, height: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::domain("arity must be at least 1"));
        }
        Ok(Self::DeltaAry { arity, height })
    }

    pub fn galton_watson(offspring: OffspringDistribution, height: usize) -> Self {
        Self::GaltonWatson {
            offspring,
            height,
            max_vertices: DEFAULT_MAX_VERTICES,
        }
    }

    pub fn with_max_vertices(self, cap: usize) -> Self {
        match self {
            Self::GaltonWatson { offspring, height, .. } => Self::GaltonWatson {
                offspring,
                height,
                max_vertices: cap,
            },
            other => other,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Self::DeltaAry { height, .. } | Self::GaltonWatson { height, .. } => *height,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::GaltonWatson { .. })
    }
}

/// Builds the tree described by `spec`. The stream is only consumed for
/// Galton-Watson trees, one offspring draw per vertex above depth `h` in
/// vertex order.
pub fn build_tree<R: Rng + ?Sized>(spec: &TreeSpec, rng: &mut R) -> Result<RootedTree> {
    match spec {
        TreeSpec::DeltaAry { arity, height } => delta_ary(*arity, *height),
        TreeSpec::GaltonWatson {
            offspring,
            height,
            max_vertices,
        } => galton_watson(offspring, *height, *max_vertices, rng),
    }
}

fn delta_ary(arity: usize, height: usize) -> Result<RootedTree> {
    if arity == 0 {
        return Err(Error::domain("arity must be at least 1"));
    }
    let mut total: usize = 1;
    let mut level: usize = 1;
    for _ in 0..height {
        level = level
            .checked_mul(arity)
            .ok_or_else(|| Error::domain("tree size overflows usize"))?;
        total = total
            .checked_add(level)
            .ok_or_else(|| Error::domain("tree size overflows usize"))?;
    }
    let mut builder = TreeBuilder::with_capacity(total);
    let internal = total - level;
    for parent in 0..internal {
        for _ in 0..arity {
            builder.add_child(parent)?;
        }
    }
    Ok(builder.build())
}

fn galton_watson<R: Rng + ?Sized>(
    offspring: &OffspringDistribution,
    height: usize,
    max_vertices: usize,
    rng: &mut R,
) -> Result<RootedTree> {
    if max_vertices == 0 {
        return Err(Error::Config("max_vertices must be positive".into()));
    }
    let mut builder = TreeBuilder::new();
    let mut frontier: std::ops::Range<Vertex> = 0..1;
    for level in 1..=height {
        let start = builder.vertex_count();
        for parent in frontier.clone() {
            let k = offspring.sample(rng);
            if builder.vertex_count() + k > max_vertices {
                return Err(Error::Overflow {
                    level,
                    vertices: builder.vertex_count() + k,
                    max_vertices,
                });
            }
            for _ in 0..k {
                builder.add_child(parent)?;
            }
        }
        frontier = start..builder.vertex_count();
        if frontier.is_empty() {
            break;
        }
    }
    Ok(builder.build())
}

/// Vertices at depth exactly `h`, empty past the height of the tree.
pub fn level_set(tree: &RootedTree, h: usize) -> &[Vertex] {
    tree.level_set(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn no_rng() -> rng::StreamRng {
        rng::stream(0, 0)
    }

    #[test]
    fn binary_tree_of_height_three() {
        let t = build_tree(&TreeSpec::delta_ary(2, 3).unwrap(), &mut no_rng()).unwrap();
        assert_eq!(t.vertex_count(), 15);
        assert_eq!(level_set(&t, 3).len(), 8);
        assert_eq!(level_set(&t, 0), &[0]);
        assert!(level_set(&t, 4).is_empty());
    }

    #[test]
    fn unary_tree_is_a_path() {
        let t = build_tree(&TreeSpec::delta_ary(1, 5).unwrap(), &mut no_rng()).unwrap();
        assert_eq!(t.vertex_count(), 6);
        for v in 1..6 {
            assert_eq!(t.parent(v), Some(v - 1));
        }
    }

    #[test]
    fn zero_arity_is_rejected() {
        assert!(TreeSpec::delta_ary(0, 2).is_err());
    }

    #[test]
    fn height_zero_is_a_single_root() {
        let t = build_tree(&TreeSpec::delta_ary(3, 0).unwrap(), &mut no_rng()).unwrap();
        assert_eq!(t.vertex_count(), 1);
        let gw = TreeSpec::galton_watson(OffspringDistribution::Poisson(3.0), 0);
        assert_eq!(build_tree(&gw, &mut no_rng()).unwrap().vertex_count(), 1);
    }

    #[test]
    fn gw_mean_level_size_is_d_to_the_h() {
        let spec = TreeSpec::galton_watson(OffspringDistribution::Poisson(2.0), 4);
        let n = 100_000;
        let mut rng = rng::stream(17, 0);
        let sizes: Vec<f64> = (0..n)
            .map(|_| level_set(&build_tree(&spec, &mut rng).unwrap(), 4).len() as f64)
            .collect();
        let mean = sizes.iter().sum::<f64>() / n as f64;
        let var = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 16.0).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn gw_is_deterministic_given_the_stream() {
        let spec = TreeSpec::galton_watson(OffspringDistribution::Poisson(2.5), 6);
        let a = build_tree(&spec, &mut rng::stream(9, 3)).unwrap();
        let b = build_tree(&spec, &mut rng::stream(9, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gw_extinction_gives_empty_levels() {
        let spec = TreeSpec::galton_watson(
            OffspringDistribution::finite_table(vec![0, 2], vec![0.9, 0.1]).unwrap(),
            10,
        );
        let mut rng = rng::stream(1, 1);
        let extinct = (0..200)
            .map(|_| build_tree(&spec, &mut rng).unwrap())
            .find(|t| level_set(t, 10).is_empty())
            .expect("subcritical process dies out");
        assert!(extinct.height() < 10);
    }

    #[test]
    fn gw_budget_overflow() {
        let spec = TreeSpec::galton_watson(OffspringDistribution::Fixed(10), 6).with_max_vertices(1000);
        match build_tree(&spec, &mut no_rng()) {
            Err(Error::Overflow { level, max_vertices, .. }) => {
                assert_eq!(level, 3);
                assert_eq!(max_vertices, 1000);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn delta_ary_level_sizes(arity in 1usize..5, height in 0usize..6) {
                let t = build_tree(&TreeSpec::delta_ary(arity, height).unwrap(), &mut no_rng()).unwrap();
                for l in 0..=height {
                    prop_assert_eq!(level_set(&t, l).len(), arity.pow(l as u32));
                }
                prop_assert_eq!(t.level_sizes().sum::<usize>(), t.vertex_count());
            }

            #[test]
            fn gw_level_sizes_sum(seed in any::<u64>(), d in 0.5f64..3.0) {
                let spec = TreeSpec::galton_watson(OffspringDistribution::Poisson(d), 5);
                let t = build_tree(&spec, &mut rng::stream(seed, 0)).unwrap();
                prop_assert_eq!(t.level_sizes().sum::<usize>(), t.vertex_count());
                prop_assert!(t.height() <= 5);
            }
        }
    }
}
