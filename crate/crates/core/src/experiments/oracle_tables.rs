//! Exact tables of the crater pattern probabilities, with the identities
//! that tie them together checked as exact claims.

use num::rational::BigRational;
use num::traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::cli::ExperimentConfig;
use crate::error::Result;
use crate::oracle;
use crate::report::{Claim, Report};

#[derive(Debug, Clone, Serialize)]
pub struct OracleTablesParams {
    pub p_max: u64,
    pub phat_max: u64,
    pub a_max: u64,
    pub b_max: u64,
    pub series_terms: u64,
}

impl Default for OracleTablesParams {
    fn default() -> Self {
        OracleTablesParams { p_max: 20, phat_max: 20, a_max: 6, b_max: 6, series_terms: 30 }
    }
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let params = OracleTablesParams::default();
    let report = oracle_tables(&params, cfg.seed)?;
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        write_tables(&params, dir)?;
        report.write_json(&dir.join("oracle-tables.json"))?;
        report.write_claims_csv(&dir.join("oracle-tables-claims.csv"))?;
    }
    Ok(report)
}

pub fn oracle_tables(params: &OracleTablesParams, seed: u64) -> Result<Report> {
    let mut report = Report::new("oracle-tables", "none", seed, serde_json::to_value(params)?);

    // second-difference identity between the run-length laws
    let two = BigRational::from(num::BigInt::from(2));
    let identity_holds = (1..=30u64).all(|n| {
        oracle::closed_p(n).into_inner()
            == oracle::closed_phat(n).into_inner() - &two * oracle::closed_phat(n + 1).into_inner()
                + oracle::closed_phat(n + 2).into_inner()
    });
    report.push(Claim::boolean(
        "phat-second-difference",
        "p_n = phat_n - 2 phat_{n+1} + phat_{n+2} exactly for n <= 30",
        identity_holds,
    ));

    // gap independence holds at i = 2 and fails at i = 1
    let p0 = oracle::p_zero().into_inner();
    let p2 = oracle::closed_p(2).into_inner();
    let at_two = (1..=10u64).all(|j| {
        oracle::closed_a(2, j).unwrap().into_inner() * &p0 == &p2 * oracle::closed_p(j).into_inner()
    });
    report.push(Claim::boolean(
        "gap-independence-at-two",
        "P(A_2j) p0 = p_2 p_j exactly for j <= 10",
        at_two,
    ));
    let p1 = oracle::closed_p(1).into_inner();
    let at_one_fails = (1..=10u64).any(|j| {
        oracle::closed_a(1, j).unwrap().into_inner() * &p0 != &p1 * oracle::closed_p(j).into_inner()
    });
    report.push(Claim::boolean(
        "gap-independence-fails-at-one",
        "the same identity is violated for i = 1 at some j <= 10",
        at_one_fails,
    ));

    // both series converge to 2/3
    let (total, weighted) = oracle::series_partial_sums(params.series_terms);
    let target = BigRational::new(num::BigInt::from(2), num::BigInt::from(3));
    report.push(Claim::within(
        "run-length-total",
        "p_0 + sum p_n at N=30 vs 2/3",
        (total - &target).to_f64().unwrap().abs(),
        0.0,
        1e-12,
    ));
    report.push(Claim::within(
        "run-length-mean",
        "sum n p_n at N=30 vs 2/3",
        (weighted - &target).to_f64().unwrap().abs(),
        0.0,
        1e-12,
    ));

    // mound-position law marginalizes back to the run-length law
    let b_sums = (1..=8u64).all(|n| {
        let mut sum = BigRational::zero();
        for i in 0..n {
            sum += oracle::closed_b(i, n - 1 - i).into_inner();
        }
        sum == oracle::closed_p(n).into_inner()
    });
    report.push(Claim::boolean(
        "b-marginalizes-to-p",
        "sum over i+j = n-1 of B(i,j) equals p_n exactly for n <= 8",
        b_sums,
    ));

    let symmetric = (0..=params.b_max).all(|i| {
        (i..=params.b_max).all(|j| oracle::closed_b(i, j) == oracle::closed_b(j, i))
    });
    report.push(Claim::boolean("b-symmetry", "B(i,j) = B(j,i) exactly", symmetric));

    Ok(report)
}

fn write_tables(params: &OracleTablesParams, dir: &std::path::Path) -> Result<()> {
    let mut out = String::from("name,i,j,numerator,denominator,decimal\n");
    let mut push = |name: &str, i: u64, j: u64, p: &oracle::ExactProb| {
        out.push_str(&format!(
            "{name},{i},{j},{},{},{:.15e}\n",
            p.value().numer(),
            p.value().denom(),
            p.to_f64()
        ));
    };
    push("p", 0, 0, &oracle::p_zero());
    for n in 1..=params.p_max {
        push("p", n, 0, &oracle::closed_p(n));
    }
    for n in 1..=params.phat_max {
        push("phat", n, 0, &oracle::closed_phat(n));
    }
    for i in 1..=params.a_max {
        for j in 1..=params.a_max {
            push("A", i, j, &oracle::closed_a(i, j)?);
        }
    }
    for i in 0..=params.b_max {
        for j in 0..=params.b_max {
            push("B", i, j, &oracle::closed_b(i, j));
        }
    }
    std::fs::write(dir.join("oracle-tables.csv"), out)?;
    Ok(())
}
