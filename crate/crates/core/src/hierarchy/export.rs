//! JSON export of the hierarchy.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Concept, HierarchyNode, Member};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportNode {
    pub label: String,
    pub label_id: usize,
    pub level: usize,
    pub members: Vec<Member>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub children: Vec<ExportNode>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExportOptions {
    pub include_centers: bool,
}

impl ExportNode {
    pub fn from_node(node: &HierarchyNode, concepts: &[Concept], options: ExportOptions) -> Self {
        let labels: HashMap<usize, &str> = concepts.iter().map(|c| (c.id, c.canonical_label.as_str())).collect();
        Self::convert(node, &labels, options)
    }

    fn convert(node: &HierarchyNode, labels: &HashMap<usize, &str>, options: ExportOptions) -> Self {
        ExportNode {
            label: labels.get(&node.label_concept_id).map(|s| s.to_string()).unwrap_or_default(),
            label_id: node.label_concept_id,
            level: node.level,
            members: node.members.clone(),
            center: options.include_centers.then(|| node.center.clone()),
            children: node.children.iter().map(|c| Self::convert(c, labels, options)).collect(),
        }
    }

    /// Rebuilds the tree; centers come back empty unless they were exported.
    pub fn to_node(&self) -> HierarchyNode {
        HierarchyNode {
            label_concept_id: self.label_id,
            level: self.level,
            members: self.members.clone(),
            center: self.center.clone().unwrap_or_default(),
            children: self.children.iter().map(ExportNode::to_node).collect(),
        }
    }
}
