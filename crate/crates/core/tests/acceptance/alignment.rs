use std::cmp::Ordering;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use polyfuse::fusion::{greedy_match, similarity};

use crate::common::{awkward_text, sentence};

/// Every partial matching of min(rows, cols) pairs, as row -> column.
fn complete_matchings(rows: usize, cols: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(row: usize, rows: usize, cols: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let want = rows.min(cols);
        if cur.len() == want {
            out.push(cur.clone());
            return;
        }
        if row == rows || rows - row < want - cur.len() {
            return;
        }
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                cur.push((row, c));
                go(row + 1, rows, cols, used, cur, out);
                cur.pop();
                used[c] = false;
            }
        }
        go(row + 1, rows, cols, used, cur, out);
    }
    let mut out = Vec::new();
    go(0, rows, cols, &mut vec![false; cols], &mut Vec::new(), &mut out);
    out
}

fn sorted_weights(sim: &[Vec<f64>], m: &[(usize, usize)]) -> Vec<f64> {
    let mut w: Vec<f64> = m.iter().map(|&(i, j)| sim[i][j]).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn random_matrix(rng: &mut StdRng) -> Vec<Vec<f64>> {
    let rows = rng.gen_range(1..=6);
    let cols = rng.gen_range(1..=6);
    if rng.gen_bool(0.5) {
        let left: Vec<String> = (0..rows).map(|_| sentence(rng, 2, 7)).collect();
        let right: Vec<String> = (0..cols).map(|_| sentence(rng, 2, 7)).collect();
        left.iter().map(|l| right.iter().map(|r| similarity(l, r)).collect()).collect()
    } else {
        // coarse grid so that some instances have ties
        (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0..40) as f64 / 40.0).collect()).collect()
    }
}

pub fn run() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(23);
    let mut distinct = 0;
    let mut max_sum_agree = 0;
    for case in 0..500 {
        let sim = random_matrix(&mut rng);
        let (rows, cols) = (sim.len(), sim[0].len());
        let got = greedy_match(&sim);
        if got.len() != rows.min(cols) {
            return Err(format!("case {case}: {} pairs for a {rows}x{cols} matrix", got.len()));
        }
        let mut row_of = vec![None; cols];
        let mut col_of = vec![None; rows];
        for &(i, j) in &got {
            if col_of[i].is_some() || row_of[j].is_some() {
                return Err(format!("case {case}: unit used twice"));
            }
            col_of[i] = Some(j);
            row_of[j] = Some(i);
        }
        // no unmatched pair beats both of the matched pairs it touches
        for i in 0..rows {
            for j in 0..cols {
                if col_of[i] == Some(j) {
                    continue;
                }
                let row_best = col_of[i].map_or(f64::NEG_INFINITY, |c| sim[i][c]);
                let col_best = row_of[j].map_or(f64::NEG_INFINITY, |r| sim[r][j]);
                if sim[i][j] > row_best && sim[i][j] > col_best {
                    return Err(format!("case {case}: pair ({i},{j}) blocks the greedy matching"));
                }
            }
        }

        let mut values: Vec<u64> = sim.iter().flatten().map(|v| v.to_bits()).collect();
        values.sort_unstable();
        values.dedup();
        let all_distinct = values.len() == rows * cols;
        let matchings = complete_matchings(rows, cols);
        if all_distinct {
            distinct += 1;
            let best = matchings
                .iter()
                .max_by(|a, b| lex_cmp(&sorted_weights(&sim, a), &sorted_weights(&sim, b)))
                .unwrap();
            let mut want = best.clone();
            want.sort();
            let mut have = got.clone();
            have.sort();
            if want != have {
                return Err(format!("case {case}: greedy {have:?}, brute force {want:?}"));
            }
        }
        let total = |m: &[(usize, usize)]| m.iter().map(|&(i, j)| sim[i][j]).sum::<f64>();
        let best_sum = matchings.iter().map(|m| total(m)).fold(f64::NEG_INFINITY, f64::max);
        if (total(&got) - best_sum).abs() < 1e-12 {
            max_sum_agree += 1;
        }
    }
    if distinct < 100 {
        return Err(format!("only {distinct} all-distinct instances"));
    }

    for case in 0..1000 {
        let a = if case % 3 == 0 { awkward_text(&mut rng) } else { sentence(&mut rng, 0, 12) };
        let b = if case % 5 == 0 { a.clone() } else { sentence(&mut rng, 0, 12) };
        let (ab, ba) = (similarity(&a, &b), similarity(&b, &a));
        if ab.to_bits() != ba.to_bits() {
            return Err(format!("similarity not symmetric for {a:?} / {b:?}: {ab} vs {ba}"));
        }
        if !(0.0..=1.0).contains(&ab) {
            return Err(format!("similarity {ab} out of range"));
        }
    }
    Ok(format!(
        "500 instances, {distinct} all-distinct matched brute force, max-sum agreement {max_sum_agree}/500, 1000 symmetric pairs"
    ))
}
