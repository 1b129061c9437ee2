//! Clustering coefficient of the resource graph, reported as `1 - cc` so
//! that sparse, weakly clustered link structures score close to 1.

use crate::graph::{estimate_cc, mixing_time, random_walk, ResourceGraph, WalkConfig};
use crate::ntriples::Triple;

use super::{MetricError, MetricKind, MetricProcessor, MetricResult, Variant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringConfig {
    pub mixing_multiplier: f64,
    pub min_steps: usize,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            mixing_multiplier: 1.0,
            min_steps: 3,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct ClusteringProcessor {
    variant: Variant,
    config: ClusteringConfig,
    graph: ResourceGraph,
}

impl ClusteringProcessor {
    pub fn new(variant: Variant, config: ClusteringConfig) -> Result<Self, MetricError> {
        WalkConfig {
            mixing_multiplier: config.mixing_multiplier,
            seed: config.seed,
            min_steps: config.min_steps,
        }
        .validate()?;
        Ok(ClusteringProcessor {
            variant,
            config,
            graph: ResourceGraph::new(),
        })
    }

    pub fn graph(&self) -> &ResourceGraph {
        &self.graph
    }
}

impl MetricProcessor for ClusteringProcessor {
    fn kind(&self) -> MetricKind {
        MetricKind::ClusteringCoefficient
    }

    fn variant(&self) -> Variant {
        self.variant
    }

    fn process(&mut self, t: &Triple, _line: u64) -> Result<(), MetricError> {
        self.graph.add_triple_edge(t);
        Ok(())
    }

    fn finalize(self: Box<Self>) -> Result<MetricResult, MetricError> {
        let n = self.graph.vertex_count();
        let g = self.graph.compact();
        let seed = (self.variant == Variant::Estimate).then_some(self.config.seed);
        let mut r = MetricResult::new(MetricKind::ClusteringCoefficient, self.variant, seed)
            .counter("vertices", n as u64)
            .counter("edges", g.edge_count() as u64);
        if self.variant == Variant::Estimate {
            r = r
                .param("m", self.config.mixing_multiplier)
                .param("min_steps", self.config.min_steps);
        }
        let cc = if g.edge_count() == 0 {
            r = r.counter("noEdges", 1);
            0.0
        } else {
            match self.variant {
                Variant::Exact => g.global_cc()?,
                Variant::Estimate => {
                    let steps =
                        mixing_time(n, self.config.mixing_multiplier, self.config.min_steps);
                    r = r.counter("steps", steps as u64);
                    estimate_cc(&random_walk(&g, steps, self.config.seed)?)?
                }
            }
        };
        r = r.detail("clusteringCoefficient", cc);
        r.value = 1.0 - cc;
        Ok(r)
    }
}
