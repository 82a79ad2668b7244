use serde::{Deserialize, Serialize};

use super::{Annotation, Entity, EntityId, Fragment, FragmentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OpKind {
    Create,
    Modify,
    Delete,
    Merge,
    Rename,
    Drag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OpTarget {
    Entity,
    Fragment,
    Annotation,
}

/// Post-operation snapshot of the target; enough to replay the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum OpPayload {
    Entity { entity: Entity },
    Fragment { fragment: Fragment },
    Annotation { annotation: Annotation },
    Merged { fragment: Fragment, removed: FragmentId },
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OperationRecord {
    pub seq: u64,
    pub timestamp: u64,
    pub kind: OpKind,
    pub target: OpTarget,
    pub target_id: String,
    pub payload: OpPayload,
    /// Entities this operation touched, for recency ranking.
    #[serde(default)]
    pub touched: Vec<EntityId>,
}

/// Entity/fragment/annotation sets rebuilt from an operation log alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayState {
    pub entities: Vec<Entity>,
    pub fragments: Vec<Fragment>,
    pub annotations: Vec<Annotation>,
}

impl ReplayState {
    pub fn replay<'a>(records: impl IntoIterator<Item = &'a OperationRecord>) -> Self {
        let mut state = Self::default();
        for rec in records {
            state.apply(rec);
        }
        state
    }

    fn apply(&mut self, rec: &OperationRecord) {
        match (&rec.target, &rec.payload) {
            (OpTarget::Entity, OpPayload::Entity { entity }) => upsert(&mut self.entities, entity.clone(), |e| &e.id.0),
            (OpTarget::Entity, OpPayload::Removed) => self.entities.retain(|e| e.id.0 != rec.target_id),
            (OpTarget::Fragment, OpPayload::Fragment { fragment }) => {
                upsert(&mut self.fragments, fragment.clone(), |f| &f.id.0)
            }
            (OpTarget::Fragment, OpPayload::Merged { fragment, removed }) => {
                upsert(&mut self.fragments, fragment.clone(), |f| &f.id.0);
                self.fragments.retain(|f| &f.id != removed);
            }
            (OpTarget::Fragment, OpPayload::Removed) => self.fragments.retain(|f| f.id.0 != rec.target_id),
            (OpTarget::Annotation, OpPayload::Annotation { annotation }) => {
                upsert(&mut self.annotations, annotation.clone(), |a| &a.id.0)
            }
            (OpTarget::Annotation, OpPayload::Removed) => self.annotations.retain(|a| a.id.0 != rec.target_id),
            _ => {}
        }
    }
}

fn upsert<T>(items: &mut Vec<T>, item: T, key: impl Fn(&T) -> &String) {
    match items.iter().position(|x| key(x) == key(&item)) {
        Some(i) => items[i] = item,
        None => items.push(item),
    }
}
