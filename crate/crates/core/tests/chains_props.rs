use std::collections::BTreeMap;

use chaingrav::chains::{
    count_dyadic, count_triadic, enumerate_all, summary_tables, Attribution, DyadMode,
};
use chaingrav::ownership::{ultimate_parents, EquityEdge, EquityGraph, Firm, IdentifyOptions};
use chaingrav::Iso2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const COUNTRIES: [&str; 5] = ["US", "DE", "IE", "LU", "NL"];

/// A forest where each tree node's parent is an earlier node of the same tree.
struct Forest {
    ids: Vec<String>,
    country: Vec<Iso2>,
    /// `up[v]` is the tree parent of node `v`, `None` for roots.
    up: Vec<Option<usize>>,
}

impl Forest {
    fn random(rng: &mut ChaCha8Rng, trees: usize) -> Forest {
        let mut f = Forest {
            ids: Vec::new(),
            country: Vec::new(),
            up: Vec::new(),
        };
        for _ in 0..trees {
            let base = f.ids.len();
            let size = rng.random_range(2..=9);
            for v in 0..size {
                f.ids.push(format!("n{}", f.ids.len()));
                f.country.push(COUNTRIES[rng.random_range(0..COUNTRIES.len())].parse().unwrap());
                f.up.push(if v == 0 { None } else { Some(base + rng.random_range(0..v)) });
            }
        }
        f
    }

    fn graph(&self, names: &[String]) -> EquityGraph {
        let firms = (0..self.ids.len())
            .map(|v| Firm {
                id: names[v].clone(),
                country: self.country[v],
                sector: None,
            })
            .collect();
        let edges = (0..self.ids.len())
            .filter_map(|v| {
                self.up[v].map(|u| EquityEdge {
                    shareholder: names[u].clone(),
                    target: names[v].clone(),
                    share: 100.0,
                })
            })
            .collect();
        EquityGraph::new(firms, edges)
    }

    fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut c = self.up[v];
        while let Some(u) = c {
            out.push(u);
            c = self.up[u];
        }
        out
    }

    fn is_leaf(&self, v: usize) -> bool {
        self.up[v].is_some() && !self.up.contains(&Some(v))
    }
}

type Counts = BTreeMap<(Iso2, Iso2), u64>;

fn naive(f: &Forest, mode: DyadMode) -> Counts {
    let mut t = Counts::new();
    let n = f.ids.len();
    let complex_root = |r: usize| (0..n).any(|v| f.ancestors(v).len() >= 2 && *f.ancestors(v).last().unwrap() == r);
    for v in 0..n {
        let anc = f.ancestors(v);
        let Some(&root) = anc.last() else { continue };
        let mut add = |a: usize, b: usize| *t.entry((f.country[a], f.country[b])).or_default() += 1;
        match mode {
            DyadMode::DirectAll => add(anc[0], v),
            DyadMode::DirectComplex => {
                if complex_root(root) {
                    add(anc[0], v)
                }
            }
            DyadMode::ParentSubsidiary => add(root, v),
            DyadMode::MiddlemanFinal => {
                for &m in &anc[..anc.len() - 1] {
                    add(m, v);
                }
            }
            DyadMode::FinalAll => {
                if f.is_leaf(v) {
                    add(root, v)
                }
            }
        }
    }
    t
}

#[test]
fn dyadic_counts_match_naive_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let f = Forest::random(&mut rng, 50);
        let g = f.graph(&f.ids);
        let nets = ultimate_parents(&g, &IdentifyOptions::default()).unwrap();
        assert_eq!(nets.len(), 50);
        for mode in DyadMode::ALL {
            assert_eq!(count_dyadic(&nets, &g, mode).unwrap(), naive(&f, mode), "{mode}");
        }
        let leaves = (0..f.ids.len()).filter(|&v| f.is_leaf(v)).count();
        let chains = enumerate_all(&nets, &g).unwrap();
        assert_eq!(chains.len(), leaves);
        let s = summary_tables(&nets, &g).unwrap();
        assert_eq!(s.matrix.total() as usize, leaves);
        for c in &chains {
            assert_eq!(c.countries.len(), c.firms.len());
            assert_eq!(c.foreign_countries_crossed() == 0, c.countries.iter().all(|x| *x == c.countries[0]));
        }
    }
}

#[test]
fn triadic_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let f = Forest::random(&mut rng, 40);
        let g = f.graph(&f.ids);
        let nets = ultimate_parents(&g, &IdentifyOptions::default()).unwrap();
        for attribution in [Attribution::LastMiddleman, Attribution::AllMiddlemen] {
            let t = count_triadic(&nets, &g, attribution).unwrap();
            let mut sums: BTreeMap<(Iso2, Iso2), u64> = BTreeMap::new();
            for (&(i, _, j), &m) in &t.cells {
                *sums.entry((i, j)).or_default() += m;
            }
            assert_eq!(sums, t.dyads);
            let mut shares: BTreeMap<(Iso2, Iso2), f64> = BTreeMap::new();
            for r in t.rows() {
                assert!((0.0..=1.0).contains(&r.share));
                *shares.entry((r.i, r.j)).or_default() += r.share;
            }
            assert!(shares.values().all(|s| (s - 1.0).abs() <= 1e-12));
        }
        // last-middleman totals equal the number of indirect chains
        let t = count_triadic(&nets, &g, Attribution::LastMiddleman).unwrap();
        let indirect = (0..f.ids.len()).filter(|&v| f.is_leaf(v) && f.ancestors(v).len() >= 2).count();
        assert_eq!(t.dyads.values().sum::<u64>() as usize, indirect);
    }
}

#[test]
fn flat_networks_have_no_triads() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut f = Forest::random(&mut rng, 30);
    // hang every subsidiary directly under its root
    for v in 0..f.ids.len() {
        if let Some(&root) = f.ancestors(v).last() {
            f.up[v] = Some(root);
        }
    }
    let g = f.graph(&f.ids);
    let nets = ultimate_parents(&g, &IdentifyOptions::default()).unwrap();
    assert!(count_triadic(&nets, &g, Attribution::AllMiddlemen).unwrap().is_empty());
    assert!(count_dyadic(&nets, &g, DyadMode::MiddlemanFinal).unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn middleman_counts_survive_relabeling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Forest::random(&mut rng, 12);
        let g = f.graph(&f.ids);
        let mut names: Vec<String> = (0..f.ids.len()).map(|i| format!("z{i:03}")).collect();
        names.shuffle(&mut rng);
        let h = f.graph(&names);
        let a = count_dyadic(&ultimate_parents(&g, &IdentifyOptions::default()).unwrap(), &g, DyadMode::MiddlemanFinal).unwrap();
        let b = count_dyadic(&ultimate_parents(&h, &IdentifyOptions::default()).unwrap(), &h, DyadMode::MiddlemanFinal).unwrap();
        prop_assert_eq!(a, b);
    }
}
