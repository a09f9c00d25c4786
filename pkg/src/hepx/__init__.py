"""Adaptive rule-based expert-system shell.

Inference (forward and backward chaining over attribute=value rules),
decision-tree induction from a case base, experience-driven generalization,
runtime rule discovery, a line-oriented knowledge-base format, and a CLI
plus HTTP consultation service. Ships with a 32-case viral-hepatitis
knowledge base as the reference corpus.
"""

from .engine import (AnswerError, CycleError, NextQuestion, Proved, Session,
                     SessionStateError, Unknown, WorkingMemory, answer,
                     backward_chain, explain_how, explain_why, forward_chain,
                     resolve_conflict)
from .induction import (DecisionTree, GainTable, Leaf, Split, classify,
                        gain_table, induce_tree, tree_to_rules)
from .learner import (DiscoveryProposal, GeneralizationReport, ValidationResult,
                      abort_discovery, commit_discovery, experience_generalize,
                      propose_discovery, record_firing, subsume_generalize)
from .model import (AttributeDef, AuditEntry, CaseRecord, Condition, Derivation,
                    Diagnostic, ExperienceStats, Fact, KnowledgeBase, Rule,
                    experience, validate_kb)
from .rulelang import (ParseDiagnostic, ParseError, SourceSpan,
                       format_experience_report, parse_case, parse_rule,
                       serialize_case, serialize_rule)
from .store import KbStore, dumps, load, loads, replay_audit, save

__version__ = "0.1.0"
