//! Counting-level checks of the measure-family construction behind E_λ(A).

mod census;
mod family;
mod toy;
mod valuation;

pub use census::{census_e_a, CensusReport};
pub use family::{
    family_sum, fixture, validate_family, PartitionFamily, SyntheticFamily, ValidationReport,
    FIXTURE_NAMES,
};
pub use toy::{toy_census_enumeration, CoverageTable, ENUMERATION_LIMIT};
pub use valuation::{
    binom_divisibility, carries, legendre, perm_integrality, prime_factors, scan_csv, scan_even_n,
    scan_table, DivisibilityResult, PermIntegrality, ValuationRow, MAX_N,
};
