//! Inter-patient splits: the test records are fixed per task; training is
//! the complement of the test and discarded sets over whatever records are
//! present. Patients never straddle the boundary.

use super::{DatasetError, Task};
use std::collections::BTreeSet;

/// Records discarded from the arrhythmia task (dominated by unclassifiable
/// paced beats).
pub const ARRHYTHMIA_DISCARDED: [&str; 4] = ["102", "104", "107", "217"];

/// Held-out test patients for the arrhythmia task.
pub const ARRHYTHMIA_TEST_RECORDS: [&str; 7] = ["105", "117", "214", "230", "232", "233", "234"];

/// Held-out test patients for the atrial-fibrillation task.
pub const AFIB_TEST_RECORDS: [&str; 4] = ["04746", "05121", "06453", "07879"];

/// A materialized inter-patient split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub task: Task,
    pub train_records: Vec<String>,
    pub test_records: Vec<String>,
    pub discarded_records: Vec<String>,
    /// Fraction of training segments set aside for validation.
    pub validation_fraction: f64,
    pub seed: u64,
}

/// Build the split for a task from the records actually present. Fails when
/// any fixed test record is absent, listing the absentees.
pub fn make_split(task: Task, available: &[String], seed: u64) -> Result<SplitSpec, DatasetError> {
    let present: BTreeSet<&str> = available.iter().map(String::as_str).collect();
    let (test_list, discard_list): (&[&str], &[&str]) = match task {
        Task::Arrhythmia => (&ARRHYTHMIA_TEST_RECORDS, &ARRHYTHMIA_DISCARDED),
        Task::Afib => (&AFIB_TEST_RECORDS, &[]),
    };
    let absent: Vec<String> = test_list
        .iter()
        .filter(|r| !present.contains(**r))
        .map(|r| r.to_string())
        .collect();
    if !absent.is_empty() {
        return Err(DatasetError::MissingRecords { task, absent });
    }

    let test: BTreeSet<&str> = test_list.iter().copied().collect();
    let discard: BTreeSet<&str> = discard_list.iter().copied().collect();
    let mut train_records = Vec::new();
    let mut discarded_records = Vec::new();
    for &r in &present {
        if test.contains(r) {
            continue;
        }
        if discard.contains(r) {
            discarded_records.push(r.to_string());
        } else {
            train_records.push(r.to_string());
        }
    }
    Ok(SplitSpec {
        task,
        train_records,
        test_records: test_list.iter().map(|r| r.to_string()).collect(),
        discarded_records,
        validation_fraction: 0.30,
        seed,
    })
}

impl SplitSpec {
    pub fn is_train(&self, record: &str) -> bool {
        self.train_records.iter().any(|r| r == record)
    }
    pub fn is_test(&self, record: &str) -> bool {
        self.test_records.iter().any(|r| r == record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mitdb_records() -> Vec<String> {
        [
            "100", "101", "102", "103", "104", "105", "106", "107", "108", "109", "111", "112",
            "113", "114", "115", "116", "117", "118", "119", "121", "122", "123", "124", "200",
            "201", "202", "203", "205", "207", "208", "209", "210", "212", "213", "214", "215",
            "217", "219", "220", "221", "222", "223", "228", "230", "231", "232", "233", "234",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    #[test]
    fn arrhythmia_test_set_is_exact() {
        let split = make_split(Task::Arrhythmia, &mitdb_records(), 1).unwrap();
        assert_eq!(
            split.test_records,
            vec!["105", "117", "214", "230", "232", "233", "234"]
        );
        // 48 records - 4 discarded - 7 test = 37 training patients.
        assert_eq!(split.train_records.len(), 37);
        assert_eq!(split.discarded_records.len(), 4);
    }

    #[test]
    fn afib_test_set_is_exact() {
        let available: Vec<String> = [
            "04015", "04043", "04048", "04126", "04746", "04908", "04936", "05091", "05121",
            "05261", "06426", "06453", "06995", "07162", "07859", "07879", "07910", "08215",
            "08219", "08378", "08405", "08434", "08455",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let split = make_split(Task::Afib, &available, 9).unwrap();
        assert_eq!(split.test_records, vec!["04746", "05121", "06453", "07879"]);
        assert_eq!(split.train_records.len(), 19);
    }

    #[test]
    fn train_test_disjoint() {
        for task in [Task::Arrhythmia, Task::Afib] {
            let available = match task {
                Task::Arrhythmia => mitdb_records(),
                Task::Afib => vec![
                    "04746".into(),
                    "05121".into(),
                    "06453".into(),
                    "07879".into(),
                    "04015".into(),
                ],
            };
            let split = make_split(task, &available, 0).unwrap();
            for r in &split.train_records {
                assert!(!split.is_test(r), "{r} in both sets");
            }
            for r in &split.discarded_records {
                assert!(!split.is_test(r) && !split.is_train(r));
            }
        }
    }

    #[test]
    fn missing_test_records_listed() {
        let available = vec!["100".to_string(), "105".to_string()];
        match make_split(Task::Arrhythmia, &available, 0) {
            Err(DatasetError::MissingRecords { absent, .. }) => {
                assert_eq!(absent, vec!["117", "214", "230", "232", "233", "234"]);
            }
            other => panic!("expected missing-record error, got {other:?}"),
        }
    }
}
