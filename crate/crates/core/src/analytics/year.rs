use chrono::{Datelike, Duration};
use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::filing::FilingRef;

/// Days subtracted from the period end before taking its calendar year.
const HALF_YEAR_DAYS: i64 = 182;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportingYear {
    pub year: i32,
    /// Set when the period end was missing and the filing date was used.
    pub fallback: bool,
}

/// The fiscal year a filing reports on: the calendar year containing
/// `period_end - 182 days`, i.e. the year holding most of the fiscal period.
/// Without a period end, the year before the filing date.
pub fn assign_reporting_year(filing: &FilingRef) -> ReportingYear {
    match filing.period_end {
        Some(end) => ReportingYear {
            year: (end - Duration::days(HALF_YEAR_DAYS)).year(),
            fallback: false,
        },
        None => {
            debug!(accession = %filing.accession_number, "no period end; using filing year - 1");
            ReportingYear {
                year: filing.filing_date.year() - 1,
                fallback: true,
            }
        }
    }
}
