//! Per-year share of one criterion, for graphs whose groups are years.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, NodeId, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendPoint {
    pub year: i64,
    pub weight: f64,
    /// Criterion weight over the year's total weight; 0 for empty years.
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSeries {
    pub criterion: String,
    pub points: Vec<TrendPoint>,
}

impl TrendSeries {
    pub fn proportions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.proportion).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["year", "weight", "proportion"])?;
        for p in &self.points {
            w.write_record([
                p.year.to_string(),
                p.weight.to_string(),
                p.proportion.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Weight and share of `criterion` in every year from the first to the last
/// year present; years with no documents appear with weight 0.
pub fn topic_trend(graph: &BipartiteGraph, criterion: &str) -> Result<TrendSeries> {
    let ci = graph.index_of(&NodeId::c(criterion))?;
    let mut years: BTreeMap<i64, usize> = BTreeMap::new();
    for (i, name) in graph.p_nodes().iter().enumerate() {
        let year: i64 = name
            .parse()
            .map_err(|_| Error::param(format!("group `{name}` is not a year")))?;
        years.insert(year, i);
    }
    let (Some(&first), Some(&last)) = (years.keys().next(), years.keys().next_back()) else {
        return Err(Error::param("graph has no groups"));
    };
    let points = (first..=last)
        .map(|year| match years.get(&year) {
            Some(&pi) => {
                let adj = graph.adjacency(Side::P, pi);
                let total: f64 = adj.iter().map(|&(_, w)| w).sum();
                let weight = adj.iter().find(|&&(c, _)| c == ci).map_or(0.0, |&(_, w)| w);
                let proportion = if total > 0.0 { weight / total } else { 0.0 };
                TrendPoint {
                    year,
                    weight,
                    proportion,
                }
            }
            None => TrendPoint {
                year,
                weight: 0.0,
                proportion: 0.0,
            },
        })
        .collect();
    Ok(TrendSeries {
        criterion: criterion.to_string(),
        points,
    })
}
