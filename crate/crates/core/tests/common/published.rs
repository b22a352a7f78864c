//! Published heatmap tables: rows in the order printed, cells per year
//! 2016–2022, then the printed total.

pub const YEARS: [&str; 7] = ["2016", "2017", "2018", "2019", "2020", "2021", "2022"];

pub type Row = (&'static str, [u64; 7], u64);

/// Brands by co-occurrence with trending or launched products.
pub const BRANDS: [Row; 16] = [
    ("Morningstar", [21, 13, 21, 17, 9, 37, 49], 167),
    ("Fidelity", [12, 19, 14, 15, 19, 22, 14], 115),
    ("BlackRock", [13, 12, 20, 9, 21, 15, 15], 105),
    ("Vanguard", [8, 20, 15, 16, 14, 7, 15], 95),
    ("Bloomberg", [4, 21, 15, 4, 8, 14, 17], 83),
    ("Invesco", [6, 7, 19, 7, 15, 13, 5], 72),
    ("Blackstone", [0, 14, 10, 3, 10, 7, 6], 50),
    ("Goldman", [6, 8, 4, 5, 12, 4, 10], 49),
    ("JP Morgan", [7, 7, 8, 9, 8, 2, 6], 47),
    ("SSGA", [8, 4, 7, 8, 6, 6, 5], 44),
    ("T Rowe", [9, 2, 2, 7, 10, 10, 4], 44),
    ("FT", [3, 7, 3, 4, 15, 1, 10], 43),
    ("Pimco", [9, 10, 2, 2, 5, 5, 5], 38),
    ("American Century", [1, 1, 4, 11, 10, 6, 2], 35),
    ("KKR", [0, 4, 5, 2, 15, 6, 0], 32),
    ("WisdomTree", [10, 3, 2, 1, 5, 9, 2], 32),
];

/// Fidelity's co-occurring products.
pub const FIDELITY_PRODUCTS: [Row; 13] = [
    ("nontransparent etf", [0, 0, 0, 1, 6, 2, 1], 10),
    ("bitcoin etf", [0, 0, 0, 0, 0, 3, 1], 4),
    ("portfolio shielding etf", [0, 0, 0, 0, 3, 1, 0], 4),
    ("magellan fund", [0, 0, 0, 0, 3, 0, 0], 3),
    ("target date fund", [0, 0, 0, 2, 0, 0, 1], 3),
    ("bitcoin fund", [0, 0, 0, 0, 1, 0, 1], 2),
    ("hartford fund", [0, 1, 0, 0, 0, 1, 0], 2),
    ("spartan fund", [2, 0, 0, 0, 0, 0, 0], 2),
    ("spot bitcoin etf", [0, 0, 0, 0, 0, 0, 2], 2),
    ("bitcoin investment fund", [0, 0, 0, 0, 0, 2, 0], 2),
    ("semitransparent etf", [0, 0, 0, 0, 2, 0, 0], 2),
    ("esg fund", [0, 0, 0, 2, 0, 0, 0], 2),
    ("smart beta etf", [1, 0, 1, 0, 0, 0, 0], 2),
];

/// Vendors by risk-diction co-occurrence.
pub const VENDORS: [Row; 10] = [
    ("Morgan stanley", [14, 88, 86, 36, 78, 29, 35], 366),
    ("Reuters", [3, 95, 101, 40, 45, 47, 33], 364),
    ("Wells Fargo", [15, 109, 59, 48, 51, 21, 9], 312),
    ("Blackrock", [9, 19, 33, 28, 26, 71, 13], 199),
    ("JP Morgan", [5, 64, 43, 14, 15, 29, 11], 181),
    ("Merrill Lynch", [7, 47, 50, 23, 10, 6, 4], 147),
    ("BNY Mellon", [10, 14, 5, 21, 25, 20, 19], 114),
    ("Morningstar", [1, 13, 7, 27, 20, 28, 18], 114),
    ("Bloomberg", [2, 16, 18, 18, 22, 13, 7], 96),
    ("State Street", [1, 10, 3, 9, 12, 9, 0], 44),
];

/// Morgan Stanley's top risk dictions.
pub const MORGAN_STANLEY_RISKS: [Row; 5] = [
    ("lawsuit", [3, 13, 10, 3, 19, 4, 6], 58),
    ("litigation", [2, 11, 5, 1, 4, 0, 1], 24),
    ("breach", [2, 1, 1, 1, 8, 4, 5], 22),
    ("harassment", [0, 6, 7, 5, 3, 0, 0], 21),
    ("allegations", [0, 2, 12, 2, 4, 1, 0], 21),
];

use std::collections::{BTreeMap, BTreeSet};

use assocmine::associate::{ordered_pair, TrendMatrix};
use assocmine::extract::CatalogEntry;
use assocmine::{CoocRecord, EntityCatalog, EntityType, WindowLevel};

/// Rows as an entity → year → count map, ids lowercased.
pub fn counts(rows: &[Row]) -> BTreeMap<String, BTreeMap<String, u64>> {
    rows.iter()
        .map(|(label, cells, _)| {
            let per = YEARS
                .iter()
                .zip(cells)
                .filter(|(_, &c)| c > 0)
                .map(|(y, &c)| (y.to_string(), c))
                .collect();
            (label.to_lowercase(), per)
        })
        .collect()
}

pub fn matrix(rows: &[Row]) -> TrendMatrix {
    let labels: BTreeMap<String, String> =
        rows.iter().map(|(l, _, _)| (l.to_lowercase(), l.to_string())).collect();
    TrendMatrix::from_counts(counts(rows), |id| labels[id].clone())
}

/// Pair records linking `target` to each row's entity, one per non-zero
/// year, plus a catalog typing the target and the partners.
pub fn records(target: &str, target_type: EntityType, rows: &[Row], partner_type: EntityType) -> (Vec<CoocRecord>, EntityCatalog) {
    let mut recs = Vec::new();
    let mut catalog = EntityCatalog::default();
    catalog.entries.insert(
        target.to_lowercase(),
        CatalogEntry { label: target.into(), entity_type: target_type, doc_count: 0 },
    );
    for (label, per) in counts(rows) {
        catalog.entries.insert(
            label.clone(),
            CatalogEntry { label: label.clone(), entity_type: partner_type, doc_count: 0 },
        );
        for (year, count) in per {
            recs.push(CoocRecord {
                pair: ordered_pair(&target.to_lowercase(), &label),
                window: WindowLevel::Sentence,
                bucket: year,
                count,
                keywords: BTreeSet::new(),
                example_refs: Vec::new(),
            });
        }
    }
    (recs, catalog)
}
