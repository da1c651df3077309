use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use camscope_core::aggregate::{collect_all_classes, CamMatrix};
use camscope_core::dataset::DatasetBundle;
use camscope_core::nn::Model;
use camscope_core::session::Session;
use camscope_core::{Error, Result};

use crate::error::{ApiError, ApiResult};

/// Model, dataset and the per-class CAM matrices derived from them.
/// Immutable once built.
pub struct Loaded {
    pub model: Model,
    pub bundle: DatasetBundle,
    matrices: Vec<Option<Arc<CamMatrix>>>,
    sample_index: HashMap<String, usize>,
}

impl Loaded {
    pub fn new(model: Model, bundle: DatasetBundle) -> Result<Self> {
        bundle.validate()?;
        if bundle.input_length != model.config().input_length {
            return Err(Error::ShapeMismatch(format!(
                "dataset length {} does not match model input length {}",
                bundle.input_length,
                model.config().input_length
            )));
        }
        let matrices = collect_all_classes(&model, &bundle.samples)?.into_iter().map(|m| m.map(Arc::new)).collect();
        let sample_index = bundle.samples.iter().enumerate().map(|(i, s)| (s.sample_id.clone(), i)).collect();
        Ok(Self { model, bundle, matrices, sample_index })
    }

    pub fn num_classes(&self) -> usize {
        self.model.config().num_classes
    }

    pub fn class_name(&self, class: usize) -> String {
        self.bundle.class_names.get(class).cloned().unwrap_or_else(|| format!("class-{class}"))
    }

    /// Classes with at least one predicted sample, ascending.
    pub fn populated_classes(&self) -> impl Iterator<Item = (usize, &Arc<CamMatrix>)> {
        self.matrices.iter().enumerate().filter_map(|(c, m)| m.as_ref().map(|m| (c, m)))
    }

    pub fn matrix(&self, class: usize) -> ApiResult<&Arc<CamMatrix>> {
        match self.matrices.get(class) {
            None => Err(ApiError::unknown_class(class)),
            Some(None) => Err(Error::EmptyClass(class).into()),
            Some(Some(m)) => Ok(m),
        }
    }

    pub fn sample_input(&self, id: &str) -> Option<&[f64]> {
        self.sample_index.get(id).map(|&i| self.bundle.samples[i].input.as_slice())
    }
}

/// Shared handler state. Sessions are volatile and each one is locked
/// independently, so mutations to one never block another.
#[derive(Clone)]
pub struct AppState {
    loaded: Option<Arc<Loaded>>,
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
    next_session: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(model: Model, bundle: DatasetBundle) -> Result<Self> {
        Ok(Self::from_loaded(Loaded::new(model, bundle)?))
    }

    pub fn from_loaded(loaded: Loaded) -> Self {
        Self { loaded: Some(Arc::new(loaded)), ..Self::empty() }
    }

    /// A server with nothing loaded; data endpoints answer 409.
    pub fn empty() -> Self {
        Self {
            loaded: None,
            sessions: Arc::new(RwLock::new(HashMap::new())),
            next_session: Arc::new(AtomicU64::new(1)),
        }
    }

    pub fn loaded(&self) -> ApiResult<&Loaded> {
        self.loaded.as_deref().ok_or_else(ApiError::no_model)
    }

    pub fn create_session(&self, matrix: Arc<CamMatrix>) -> (String, Arc<Mutex<Session>>) {
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::Relaxed));
        let session = Arc::new(Mutex::new(Session::new(matrix)));
        self.sessions.write().expect("session table poisoned").insert(id.clone(), session.clone());
        (id, session)
    }

    pub fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}
