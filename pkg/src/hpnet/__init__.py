"""Verification workbench for hierarchical timed Petri nets."""

__version__ = "0.1.0"

from .net import (INF, Arc, Marking, Net, NotEnabledError, Place, TimeInterval, Transition,
                  UnknownNodeError, Violation, enabled_transitions, fire, postset, preset,
                  validate_structure)
from .untimed import (ExploreLimits, ReachGraph, check_boundedness, check_deadlock_freedom,
                      check_proper_completion, check_wellformed_workflow, reachability_graph)
from .hierarchy import (HierarchicalNet, HierarchyError, HierarchyWarning, abstract_sequence,
                        attach_refinement, check_condition_alteration, flatten)
from .timed import (ScheduleReport, TimedState, TimedToken, TimingViolation, check_schedulability,
                    check_time_consistency, timed_state_graph, timed_successors)
from .patterns import (Cond, Leaf, Loop, Par, Seq, check_bounds_against_oracle, interval_add,
                       interval_max, pattern_to_net, teb_eval)
from .dsl import (Diagnostic, DSLWarning, ParseError, SourceDocument, format_pattern, parse_net,
                  parse_pattern, serialize_net)
