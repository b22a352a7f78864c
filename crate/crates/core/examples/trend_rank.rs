//! Build a year-bucketed trend matrix, rank its rows and write the heatmap
//! CSV. The cell values are the brand/year counts of a published brand
//! ranking; the ranking score is simply the row total.
//!
//! cargo run --example trend_rank

use std::collections::BTreeMap;
use std::error::Error;

use assocmine::associate::{rank_rows, TrendMatrix};
use assocmine::graph::export_heatmap;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let years = ["2016", "2017", "2018", "2019", "2020", "2021", "2022"];
    let rows: [(&str, [u64; 7]); 5] = [
        ("Vanguard", [8, 20, 15, 16, 14, 7, 15]),
        ("BlackRock", [13, 12, 20, 9, 21, 15, 15]),
        ("Morningstar", [21, 13, 21, 17, 9, 37, 49]),
        ("Bloomberg", [4, 21, 15, 4, 8, 14, 17]),
        ("Fidelity", [12, 19, 14, 15, 19, 22, 14]),
    ];
    let counts: BTreeMap<String, BTreeMap<String, u64>> = rows
        .iter()
        .map(|(name, cells)| {
            let per = years.iter().map(|y| y.to_string()).zip(cells.iter().copied()).collect();
            (name.to_string(), per)
        })
        .collect();
    let matrix = TrendMatrix::from_counts(counts, str::to_string);

    for (i, r) in rank_rows(&matrix, 10).iter().enumerate() {
        println!("{}. {} {}", i + 1, r.label, r.total);
    }
    print!("{}", String::from_utf8(export_heatmap(&matrix)?)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
