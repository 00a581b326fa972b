//! Monthly-to-seasonal aggregation with a year-straddling winter.

use crate::error::{Error, Result};
use crate::panel::Panel;

/// Season of a calendar quarter. Winter of year `y` spans December of
/// `y - 1` plus January and February of `y`, so it is labeled by the
/// January year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Season {
    Winter,
    Spring,
    Summer,
    Autumn,
}

impl Season {
    fn name(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
        }
    }
}

const SEASONS: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Autumn];

/// Maps a calendar month to the (labeled year, season) bucket it feeds.
fn bucket(year: i32, month: u32) -> (i32, Season) {
    match month {
        1 | 2 => (year, Season::Winter),
        3..=5 => (year, Season::Spring),
        6..=8 => (year, Season::Summer),
        9..=11 => (year, Season::Autumn),
        12 => (year + 1, Season::Winter),
        _ => unreachable!("months are validated at parse time"),
    }
}

fn parse_year_month(label: &str) -> Result<(i32, u32)> {
    let err = || {
        Error::InvalidInput(format!(
            "time label `{label}` is not of the form YYYY-MM; seasonal aggregation \
             needs year and month"
        ))
    };
    let (y, m) = label.split_once('-').ok_or_else(err)?;
    let year: i32 = y.parse().map_err(|_| err())?;
    let month: u32 = m.parse().map_err(|_| err())?;
    if !(1..=12).contains(&month) {
        return Err(Error::InvalidInput(format!(
            "time label `{label}` has month {month}, expected 1..=12"
        )));
    }
    Ok((year, month))
}

/// Aggregates a monthly panel to seasonal means.
///
/// Time labels must be `YYYY-MM`. The output holds four seasons (winter,
/// spring, summer, autumn, labeled `YYYY-season`) for every year from the
/// earliest to the latest labeled year. A season's value is the mean of
/// its available months; a season with no observed month is missing.
/// December feeds the following year's winter, so a December in the final
/// labeled year is dropped (its winter falls outside the year range) and
/// the first winter is typically a January-February mean.
pub fn aggregate_seasons(panel: &Panel) -> Result<Panel> {
    let time_labels = panel.time_index().ok_or_else(|| {
        Error::InvalidInput(
            "panel has no time labels; seasonal aggregation needs YYYY-MM labels".into(),
        )
    })?;
    let months: Vec<(i32, u32)> =
        time_labels.iter().map(|l| parse_year_month(l)).collect::<Result<_>>()?;
    let min_year = months.iter().map(|&(y, _)| y).min().expect("panel has time points");
    let max_year = months.iter().map(|&(y, _)| y).max().expect("panel has time points");

    let years = (max_year - min_year + 1) as usize;
    let num_quarters = years * 4;
    let quarter_labels: Vec<String> = (min_year..=max_year)
        .flat_map(|y| SEASONS.iter().map(move |s| format!("{y}-{}", s.name())))
        .collect();

    // quarter slot for a (year, season) bucket, or None when the bucket
    // falls outside the labeled year range (a trailing December)
    let slot = |year: i32, season: Season| -> Option<usize> {
        if year < min_year || year > max_year {
            return None;
        }
        let season_pos = SEASONS.iter().position(|&s| s == season).expect("listed");
        Some((year - min_year) as usize * 4 + season_pos)
    };

    let (a, p) = (panel.num_groups(), panel.dim());
    let mut sums = vec![0.0; a * num_quarters * p];
    let mut counts = vec![0u32; a * num_quarters * p];
    for i in 0..a {
        for (t, &(y, m)) in months.iter().enumerate() {
            let (by, bs) = bucket(y, m);
            let Some(q) = slot(by, bs) else { continue };
            for d in 0..p {
                if !panel.is_missing(i, t, d) {
                    let k = (i * num_quarters + q) * p + d;
                    sums[k] += panel.value(i, t, d);
                    counts[k] += 1;
                }
            }
        }
    }

    let values: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    let missing: Vec<bool> = counts.iter().map(|&c| c == 0).collect();
    Panel::new(
        panel.labels().to_vec(),
        Some(quarter_labels),
        num_quarters,
        p,
        values,
        missing,
    )
}
