//! Plain-text renderings of training histories and evaluation reports.

use crate::transfer::TrainHistory;

use super::EvalReport;

/// Per-epoch CSV: `epoch,mean_loss,precision,recall,f1` (micro metrics on
/// the target test set; metric columns stay empty without a test split).
pub fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,mean_loss,precision,recall,f1\n");
    for (i, rec) in history.epochs.iter().enumerate() {
        match &rec.report {
            Some(r) => out.push_str(&format!(
                "{},{},{},{},{}\n",
                i + 1,
                rec.mean_loss,
                r.micro_precision,
                r.micro_recall,
                r.micro_f1
            )),
            None => out.push_str(&format!("{},{},,,\n", i + 1, rec.mean_loss)),
        }
    }
    out
}

/// Per-class rows plus the pooled micro row:
/// `label,precision,recall,f1,support`.
pub fn eval_report_csv(report: &EvalReport) -> String {
    let mut out = String::from("label,precision,recall,f1,support\n");
    for c in &report.per_class {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.label, c.precision, c.recall, c.f1, c.support
        ));
    }
    let micro_support: usize = report
        .per_class
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != report.negative_index)
        .map(|(_, c)| c.support)
        .sum();
    out.push_str(&format!(
        "micro,{},{},{},{}\n",
        report.micro_precision, report.micro_recall, report.micro_f1, micro_support
    ));
    out
}
