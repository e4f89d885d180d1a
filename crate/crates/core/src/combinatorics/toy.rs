//! Exhaustive check, at enumerable size, that ordered selections cover every
//! cell with every weight slot equally often.

use serde::Serialize;

use crate::error::{Error, Result};

pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageTable {
    pub grid_side: u32,
    pub select: u32,
    /// Number of ordered selections, P(grid_side², select).
    pub selections: u64,
    /// `by_position[cell][t]`: selections that put slot `t` on `cell`.
    pub by_position: Vec<Vec<u64>>,
    pub per_cell_total: Vec<u64>,
    pub uniform: bool,
}

fn falling(top: u128, k: u32) -> u128 {
    (0..u128::from(k)).map(|i| top.saturating_sub(i)).product()
}

/// Enumerates every ordered choice of `select` distinct cells out of a
/// `grid_side × grid_side` grid. Slot `t` of a selection gets the `t`-th
/// weight, mirroring how each measure hands out its weights in turn.
pub fn toy_census_enumeration(grid_side: u32, select: u32) -> Result<CoverageTable> {
    let cells = grid_side * grid_side;
    if grid_side == 0 || select == 0 || select > cells {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= select <= grid_side², got grid_side={grid_side}, select={select}"
        )));
    }
    let count = falling(u128::from(cells), select);
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let cells = cells as usize;
    let select = select as usize;
    let mut by_position = vec![vec![0u64; select]; cells];
    let mut used = vec![false; cells];
    let mut chosen = Vec::with_capacity(select);
    let mut selections = 0u64;
    enumerate(&mut used, &mut chosen, select, &mut by_position, &mut selections);

    let per_cell_total: Vec<u64> = by_position.iter().map(|r| r.iter().sum()).collect();
    let first = by_position[0][0];
    let uniform = by_position.iter().flatten().all(|&c| c == first)
        && selections as u128 == count;
    Ok(CoverageTable {
        grid_side,
        select: select as u32,
        selections,
        by_position,
        per_cell_total,
        uniform,
    })
}

fn enumerate(
    used: &mut [bool],
    chosen: &mut Vec<usize>,
    select: usize,
    by_position: &mut [Vec<u64>],
    selections: &mut u64,
) {
    if chosen.len() == select {
        *selections += 1;
        for (t, &cell) in chosen.iter().enumerate() {
            by_position[cell][t] += 1;
        }
        return;
    }
    for cell in 0..used.len() {
        if !used[cell] {
            used[cell] = true;
            chosen.push(cell);
            enumerate(used, chosen, select, by_position, selections);
            chosen.pop();
            used[cell] = false;
        }
    }
}
