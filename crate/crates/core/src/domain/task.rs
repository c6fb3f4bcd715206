use std::fmt;

use serde::{Deserialize, Serialize};

/// Broad purpose category of a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMajor {
    ContentGeneration,
    ContentEditing,
    InformationRetrieval,
    ProblemSolving,
    Other,
}

/// Fine-grained purpose category. Each minor belongs to exactly one major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMinor {
    CreativeWriting,
    OpinionExpression,
    SimulatedDialogue,
    CodeGeneration,
    Explanation,
    QuestionGeneration,
    TextEditing,
    CopywritingEditing,
    EmotionalEditing,
    InformationQuery,
    ComparativeAnalysis,
    InformationExtraction,
    Recommendation,
    QaAnalysis,
    ExerciseSolving,
    SolutionDesign,
    Other,
}

impl TaskMajor {
    pub const ALL: [TaskMajor; 5] = [
        TaskMajor::ContentGeneration,
        TaskMajor::ContentEditing,
        TaskMajor::InformationRetrieval,
        TaskMajor::ProblemSolving,
        TaskMajor::Other,
    ];

    /// Wire name, as used in JSON.
    pub fn as_str(self) -> &'static str {
        match self {
            TaskMajor::ContentGeneration => "content_generation",
            TaskMajor::ContentEditing => "content_editing",
            TaskMajor::InformationRetrieval => "information_retrieval",
            TaskMajor::ProblemSolving => "problem_solving",
            TaskMajor::Other => "other",
        }
    }

    pub fn from_wire(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn minors(self) -> impl Iterator<Item = TaskMinor> {
        TaskMinor::ALL.into_iter().filter(move |m| m.major() == self)
    }
}

impl TaskMinor {
    pub const ALL: [TaskMinor; 17] = [
        TaskMinor::CreativeWriting,
        TaskMinor::OpinionExpression,
        TaskMinor::SimulatedDialogue,
        TaskMinor::CodeGeneration,
        TaskMinor::Explanation,
        TaskMinor::QuestionGeneration,
        TaskMinor::TextEditing,
        TaskMinor::CopywritingEditing,
        TaskMinor::EmotionalEditing,
        TaskMinor::InformationQuery,
        TaskMinor::ComparativeAnalysis,
        TaskMinor::InformationExtraction,
        TaskMinor::Recommendation,
        TaskMinor::QaAnalysis,
        TaskMinor::ExerciseSolving,
        TaskMinor::SolutionDesign,
        TaskMinor::Other,
    ];

    pub fn major(self) -> TaskMajor {
        use TaskMinor::*;
        match self {
            CreativeWriting | OpinionExpression | SimulatedDialogue | CodeGeneration
            | Explanation | QuestionGeneration => TaskMajor::ContentGeneration,
            TextEditing | CopywritingEditing | EmotionalEditing => TaskMajor::ContentEditing,
            InformationQuery | ComparativeAnalysis | InformationExtraction => {
                TaskMajor::InformationRetrieval
            }
            Recommendation | QaAnalysis | ExerciseSolving | SolutionDesign => {
                TaskMajor::ProblemSolving
            }
            Other => TaskMajor::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        use TaskMinor::*;
        match self {
            CreativeWriting => "creative_writing",
            OpinionExpression => "opinion_expression",
            SimulatedDialogue => "simulated_dialogue",
            CodeGeneration => "code_generation",
            Explanation => "explanation",
            QuestionGeneration => "question_generation",
            TextEditing => "text_editing",
            CopywritingEditing => "copywriting_editing",
            EmotionalEditing => "emotional_editing",
            InformationQuery => "information_query",
            ComparativeAnalysis => "comparative_analysis",
            InformationExtraction => "information_extraction",
            Recommendation => "recommendation",
            QaAnalysis => "qa_analysis",
            ExerciseSolving => "exercise_solving",
            SolutionDesign => "solution_design",
            Other => "other",
        }
    }

    pub fn from_wire(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for TaskMajor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for TaskMinor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("minor category {minor} does not belong to major category {major}")]
pub struct LabelMismatch {
    pub major: TaskMajor,
    pub minor: TaskMinor,
}

/// A (major, minor) purpose classification. The minor always belongs to the major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLabel")]
pub struct TaskLabel {
    major: TaskMajor,
    minor: TaskMinor,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabel {
    major: TaskMajor,
    minor: TaskMinor,
}

impl TryFrom<RawLabel> for TaskLabel {
    type Error = LabelMismatch;

    fn try_from(raw: RawLabel) -> Result<Self, Self::Error> {
        TaskLabel::new(raw.major, raw.minor)
    }
}

impl TaskLabel {
    pub const OTHER: TaskLabel = TaskLabel {
        major: TaskMajor::Other,
        minor: TaskMinor::Other,
    };

    pub fn new(major: TaskMajor, minor: TaskMinor) -> Result<Self, LabelMismatch> {
        if minor.major() == major {
            Ok(Self { major, minor })
        } else {
            Err(LabelMismatch { major, minor })
        }
    }

    pub fn from_minor(minor: TaskMinor) -> Self {
        Self {
            major: minor.major(),
            minor,
        }
    }

    pub fn major(&self) -> TaskMajor {
        self.major
    }

    pub fn minor(&self) -> TaskMinor {
        self.minor
    }
}

impl fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.major, self.minor)
    }
}
