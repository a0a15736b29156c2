//! One computed certificate, flattened for CSV rows and JSON sidecars.

use crate::partition::PartitionCertificate;

/// A single bound computation with its constituents and provenance.
///
/// `bound` is clamped to [0, 1]; `raw_bound` keeps the pre-clamp value so
/// vacuous bounds (> 100%) can be reported the way the comparison tables
/// print them.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundReport {
    pub method: String,
    pub family: Option<String>,
    pub dataset: String,
    pub setting: String,
    pub seed: u64,
    pub k: usize,
    pub n_voters: usize,
    pub m_train: usize,
    pub bound: f64,
    pub raw_bound: f64,
    pub vacuous: bool,
    pub test_error: Option<f64>,
    pub train_error: Option<f64>,
    pub delta: f64,
    pub delta_split: Vec<f64>,
    pub l_tilde: Option<f64>,
    pub b_tilde: Option<f64>,
    pub c_tilde: Option<f64>,
    pub kl: Option<f64>,
    pub emp_stochastic_risk: Option<f64>,
    pub fallback_factor2: Option<bool>,
    pub partition_certified: Option<f64>,
    pub partition_achieved: Option<f64>,
    pub partition_scale: Option<u64>,
    pub partition_slack: Option<f64>,
    pub partition_method: Option<String>,
    pub mc_samples: Option<usize>,
    pub mc_seed: Option<u64>,
    pub prior: Option<String>,
    pub notes: Option<String>,
}

impl BoundReport {
    pub fn new(method: &str, dataset: &str, setting: &str, seed: u64) -> Self {
        Self {
            method: method.to_string(),
            family: None,
            dataset: dataset.to_string(),
            setting: setting.to_string(),
            seed,
            k: 0,
            n_voters: 0,
            m_train: 0,
            bound: f64::NAN,
            raw_bound: f64::NAN,
            vacuous: false,
            test_error: None,
            train_error: None,
            delta: f64::NAN,
            delta_split: Vec::new(),
            l_tilde: None,
            b_tilde: None,
            c_tilde: None,
            kl: None,
            emp_stochastic_risk: None,
            fallback_factor2: None,
            partition_certified: None,
            partition_achieved: None,
            partition_scale: None,
            partition_slack: None,
            partition_method: None,
            mc_samples: None,
            mc_seed: None,
            prior: None,
            notes: None,
        }
    }

    pub fn with_partition(mut self, cert: &PartitionCertificate) -> Self {
        self.partition_certified = Some(cert.certified_value);
        self.partition_achieved = Some(cert.achieved_value);
        self.partition_scale = Some(cert.scale);
        self.partition_slack = Some(cert.slack);
        self.partition_method = Some(cert.method.as_str().to_string());
        self
    }

    pub const CSV_HEADER: &'static str = "method,family,dataset,setting,seed,k,n_voters,m_train,\
bound,raw_bound,vacuous,test_error,train_error,delta,delta_split,l_tilde,b_tilde,c_tilde,kl,\
emp_stochastic_risk,fallback_factor2,partition_certified,partition_achieved,partition_scale,\
partition_slack,partition_method,mc_samples,mc_seed,prior,notes";

    /// One flat CSV row; float formatting is Rust's shortest round-trip form,
    /// so regenerated reports are byte-identical.
    pub fn to_csv_row(&self) -> String {
        fn opt_f(v: &Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        fn opt_s<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        let delta_split =
            self.delta_split.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";");
        [
            self.method.clone(),
            self.family.clone().unwrap_or_default(),
            self.dataset.clone(),
            self.setting.clone(),
            self.seed.to_string(),
            self.k.to_string(),
            self.n_voters.to_string(),
            self.m_train.to_string(),
            self.bound.to_string(),
            self.raw_bound.to_string(),
            self.vacuous.to_string(),
            opt_f(&self.test_error),
            opt_f(&self.train_error),
            self.delta.to_string(),
            delta_split,
            opt_f(&self.l_tilde),
            opt_f(&self.b_tilde),
            opt_f(&self.c_tilde),
            opt_f(&self.kl),
            opt_f(&self.emp_stochastic_risk),
            opt_s(&self.fallback_factor2),
            opt_f(&self.partition_certified),
            opt_f(&self.partition_achieved),
            opt_s(&self.partition_scale),
            opt_f(&self.partition_slack),
            opt_s(&self.partition_method),
            opt_s(&self.mc_samples),
            opt_s(&self.mc_seed),
            opt_s(&self.prior),
            self.notes.clone().unwrap_or_default().replace(',', ";"),
        ]
        .join(",")
    }

    /// Full JSON sidecar record.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}
