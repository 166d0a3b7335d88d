"""Meta-interpretive learning of datalog programs, and of the second-order
metarules that bias them, by specialisation of maximally general metarules."""

from .terms import (Applied, Atom, Clause, Compound, Const, Literal,
                    MetaSubstitution, Metarule, Symbol, Term, Variable,
                    alpha_equivalent, apply, canonical_form, canonical_key,
                    classify, clause, encapsulate, decapsulate,
                    fully_connected, metarule, order_literals)
from .resolution import (Bindings, ClauseStore, ProofConfig, entails,
                         sld_refute, unify)
from .subsumption import (generalise_to_matrix, generalise_to_punch,
                          is_l_spec, is_v_spec, is_vl_spec, meta_subsumes,
                          subsumes)
from .learner import (Hypothesis, InventionDepthError, MilProblem, accuracy,
                      construct, default_invented_pool, learn, top_program)
from .specialise import (SpecialisationRecord, SubstitutionBuffer,
                         ToilConfig, ToilResult, lift, look_ahead,
                         matrix_atoms, specialisation_records, toil_learn,
                         vl_specialise)
from .languages import (CountParams, Interval, LanguageDescriptor,
                        enumerate_matrix, enumerate_sort, ground_bound,
                        language_bound, matrix_bound, matrix_count_exact,
                        metasub_bound, punch_count, sort_bound)
from .problems import (canonical_h22, gen_analogy_problems, gen_anbn,
                       gen_coloured_graph, gen_grid_world, library_name,
                       lookup_metarule, matrix_h22, parse_problem,
                       punch_upto, serialize_problem)

__version__ = "0.1.0"
