use rand::Rng;

use super::config::Architecture;
use crate::conll::{Corpus, EmbeddingSet, Sentence};
use crate::crf::{nll_gradients, viterbi_decode, Emissions, Transitions};
use crate::encoders::{
    apply_dropout, apply_mask, bilstm_backward, bilstm_forward, cross_entropy_and_grads, embed,
    embed_backward, fc_head_forward, project, project_backward, BiLstmParams, EmbeddingSource,
    EmbeddingTable, FcHeadParams, Mode, ProjectionParams,
};
use crate::error::{Error, Result};
use crate::params::{prefixed, prefixed_mut, Parameters};
use crate::tagscheme::{TagVocabulary, TransitionMask};
use crate::tensor::Matrix;

/// All trainable state for one architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    architecture: Architecture,
    tags: TagVocabulary,
    input_dim: usize,
    embeddings: Option<EmbeddingTable>,
    bilstm: Option<BiLstmParams>,
    projection: Option<ProjectionParams>,
    fc_head: Option<FcHeadParams>,
    transitions: Option<Transitions>,
}

impl Model {
    /// Randomly initialized model. `embeddings` is the trainable table, or
    /// `None` when vectors of width `input_dim` are supplied per sentence.
    pub fn new<R: Rng + ?Sized>(
        architecture: Architecture,
        tags: TagVocabulary,
        input_dim: usize,
        embeddings: Option<EmbeddingTable>,
        hidden: usize,
        fc_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut model = Model::skeleton(architecture, tags, input_dim, embeddings, hidden, fc_size)?;
        let k = model.tags.k();
        match architecture {
            Architecture::Crf => {
                model.projection = Some(ProjectionParams::new(input_dim, k, rng));
            }
            Architecture::BiLstmCrf => {
                let lstm = BiLstmParams::new(input_dim, hidden, rng);
                model.projection = Some(ProjectionParams::new(lstm.output_dim(), k, rng));
                model.bilstm = Some(lstm);
            }
            Architecture::Linear => {
                model.fc_head = Some(FcHeadParams::new(input_dim, fc_size, k, rng));
            }
        }
        Ok(model)
    }

    /// Zero-valued model with the given layout; CRF transitions carry their
    /// sentinel cells.
    pub(crate) fn skeleton(
        architecture: Architecture,
        tags: TagVocabulary,
        input_dim: usize,
        embeddings: Option<EmbeddingTable>,
        hidden: usize,
        fc_size: usize,
    ) -> Result<Self> {
        if let Some(t) = &embeddings {
            if t.dim() != input_dim {
                return Err(Error::Dimension(format!(
                    "embedding table has width {}, model expects {input_dim}",
                    t.dim()
                )));
            }
        }
        if input_dim == 0 || hidden == 0 || fc_size == 0 {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        let k = tags.k();
        let mut model = Model {
            architecture,
            tags,
            input_dim,
            embeddings,
            bilstm: None,
            projection: None,
            fc_head: None,
            transitions: None,
        };
        match architecture {
            Architecture::Crf => {
                model.projection = Some(ProjectionParams::zeros(input_dim, k));
            }
            Architecture::BiLstmCrf => {
                model.bilstm = Some(BiLstmParams::zeros(input_dim, hidden));
                model.projection = Some(ProjectionParams::zeros(2 * hidden, k));
            }
            Architecture::Linear => {
                model.fc_head = Some(FcHeadParams::zeros(input_dim, fc_size, k));
            }
        }
        if architecture.uses_crf() {
            model.transitions = Some(Transitions::zeros(k));
        }
        Ok(model)
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn tags(&self) -> &TagVocabulary {
        &self.tags
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn embeddings(&self) -> Option<&EmbeddingTable> {
        self.embeddings.as_ref()
    }

    pub fn transitions(&self) -> Option<&Transitions> {
        self.transitions.as_ref()
    }

    pub fn fc_head(&self) -> Option<&FcHeadParams> {
        self.fc_head.as_ref()
    }

    /// Errors unless `tags` is the vocabulary this model was built for.
    pub fn ensure_vocabulary(&self, tags: &TagVocabulary) -> Result<()> {
        if tags.k() != self.tags.k() {
            return Err(Error::Dimension(format!(
                "model predicts {} tags, data uses {}",
                self.tags.k(),
                tags.k()
            )));
        }
        if tags != &self.tags {
            return Err(Error::Dimension(format!(
                "model tags [{}] differ from data tags [{}]",
                self.tags.tags().join(" "),
                tags.tags().join(" ")
            )));
        }
        Ok(())
    }

    /// Gradient buffer: same layout, every value zero.
    pub fn zeros_like(&self) -> Model {
        let mut z = self.clone();
        z.zero();
        z
    }

    /// Re-applies the transition sentinels after an optimizer write.
    pub fn pin_forbidden(&mut self) {
        if let Some(t) = &mut self.transitions {
            t.pin_forbidden();
        }
    }

    fn source<'a>(&'a self, ingested: Option<&'a EmbeddingSet>) -> Result<EmbeddingSource<'a>> {
        match (&self.embeddings, ingested) {
            (Some(table), _) => Ok(EmbeddingSource::Trainable(table)),
            (None, Some(set)) if set.dim() == self.input_dim => Ok(EmbeddingSource::Ingested(set)),
            (None, Some(set)) => Err(Error::Dimension(format!(
                "embeddings have width {}, model expects {}",
                set.dim(),
                self.input_dim
            ))),
            (None, None) => Err(Error::invalid(
                "model was trained on supplied embeddings; none were given",
            )),
        }
    }

    /// Emission scores for CRF architectures, log-probabilities for the linear
    /// head. Evaluation mode.
    pub fn scores(&self, sentence: &Sentence, ingested: Option<&EmbeddingSet>) -> Result<Matrix> {
        let (x, _) = embed(sentence, self.source(ingested)?, 0.0, Mode::Eval)?;
        if let Some(fc) = &self.fc_head {
            return Ok(fc_head_forward(&x, fc, 0.0, Mode::Eval)?.log_probs);
        }
        let features = match &self.bilstm {
            Some(lstm) => bilstm_forward(&x, lstm)?.0,
            None => x,
        };
        Ok(project(&features, self.projection.as_ref().expect("CRF model has a projection"))?
            .into_matrix())
    }

    /// Best tag sequence. With `constrained`, only BIO-valid sequences are
    /// considered.
    pub fn predict(
        &self,
        sentence: &Sentence,
        ingested: Option<&EmbeddingSet>,
        constrained: bool,
    ) -> Result<Vec<usize>> {
        let scores = Emissions::new(self.scores(sentence, ingested)?)?;
        let mask = constrained.then(|| TransitionMask::bio(&self.tags));
        match &self.transitions {
            Some(t) => Ok(viterbi_decode(&scores, t, mask.as_ref())?.0),
            None if constrained => {
                let zero = Transitions::zeros(self.tags.k());
                Ok(viterbi_decode(&scores, &zero, mask.as_ref())?.0)
            }
            None => Ok((0..scores.len())
                .map(|i| {
                    let row = scores.matrix().row(i);
                    (0..row.len()).fold(0, |best, j| if row[j] > row[best] { j } else { best })
                })
                .collect()),
        }
    }

    /// Training loss without dropout.
    pub fn loss(
        &self,
        sentence: &Sentence,
        gold: &[usize],
        ingested: Option<&EmbeddingSet>,
    ) -> Result<f64> {
        Ok(self.loss_and_gradients(sentence, gold, ingested, 0.0, Mode::Eval)?.0)
    }

    /// Loss (sentence NLL for CRF heads, mean token cross-entropy for the
    /// linear head) and its gradient with respect to every parameter.
    pub fn loss_and_gradients(
        &self,
        sentence: &Sentence,
        gold: &[usize],
        ingested: Option<&EmbeddingSet>,
        dropout: f64,
        mut mode: Mode<'_>,
    ) -> Result<(f64, Model)> {
        let mut grads = self.zeros_like();
        let (x, embed_cache) = embed(sentence, self.source(ingested)?, dropout, mode.reborrow())?;

        let (loss, grad_x) = if let Some(fc) = &self.fc_head {
            let out = fc_head_forward(&x, fc, dropout, mode.reborrow())?;
            let ce = cross_entropy_and_grads(&out.log_probs, gold, &out.cache, fc)?;
            grads.fc_head = Some(ce.params);
            (ce.loss, ce.input)
        } else {
            let projection = self.projection.as_ref().expect("CRF model has a projection");
            let transitions = self.transitions.as_ref().expect("CRF model has transitions");
            let lstm = match &self.bilstm {
                Some(params) => {
                    let (mut h, cache) = bilstm_forward(&x, params)?;
                    let mask = apply_dropout(&mut h, dropout, &mut mode);
                    Some((h, cache, mask))
                }
                None => None,
            };
            let features = lstm.as_ref().map_or(&x, |(h, _, _)| h);
            let emissions = project(features, projection)?;
            let crf = nll_gradients(&emissions, transitions, gold)?;
            let (grad_features, proj_grads) =
                project_backward(features, projection, &crf.emissions)?;
            grads.projection = Some(proj_grads);
            *grads.transitions.as_mut().expect("same layout").matrix_mut() = crf.transitions;
            let grad_x = match lstm {
                Some((_, cache, mask)) => {
                    let mut g = grad_features;
                    apply_mask(&mut g, mask.as_deref());
                    let params = self.bilstm.as_ref().expect("checked above");
                    let (grad_x, lstm_grads) = bilstm_backward(&cache, params, &g)?;
                    grads.bilstm = Some(lstm_grads);
                    grad_x
                }
                None => grad_features,
            };
            (crf.loss, grad_x)
        };

        let table_grad = grads.embeddings.as_mut().map(|t| t.weights_mut());
        embed_backward(&embed_cache, &grad_x, table_grad);
        Ok((loss, grads))
    }
}

impl Parameters for Model {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        if let Some(e) = &self.embeddings {
            out.extend(prefixed("embeddings", e.named_tensors()));
        }
        if let Some(l) = &self.bilstm {
            out.extend(prefixed("bilstm", l.named_tensors()));
        }
        if let Some(p) = &self.projection {
            out.extend(prefixed("projection", p.named_tensors()));
        }
        if let Some(f) = &self.fc_head {
            out.extend(prefixed("fc", f.named_tensors()));
        }
        if let Some(t) = &self.transitions {
            out.push(("transitions".into(), t.matrix()));
        }
        out
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = Vec::new();
        if let Some(e) = &mut self.embeddings {
            out.extend(prefixed_mut("embeddings", e.named_tensors_mut()));
        }
        if let Some(l) = &mut self.bilstm {
            out.extend(prefixed_mut("bilstm", l.named_tensors_mut()));
        }
        if let Some(p) = &mut self.projection {
            out.extend(prefixed_mut("projection", p.named_tensors_mut()));
        }
        if let Some(f) = &mut self.fc_head {
            out.extend(prefixed_mut("fc", f.named_tensors_mut()));
        }
        if let Some(t) = &mut self.transitions {
            out.push(("transitions".into(), t.matrix_mut()));
        }
        out
    }
}

/// Predicted tags for every sentence, in corpus order.
pub fn predict_corpus(
    model: &Model,
    corpus: &Corpus,
    ingested: Option<&EmbeddingSet>,
    constrained: bool,
) -> Result<Vec<Vec<usize>>> {
    model.ensure_vocabulary(corpus.vocabulary())?;
    corpus
        .sentences()
        .iter()
        .map(|s| model.predict(s, ingested, constrained))
        .collect()
}
