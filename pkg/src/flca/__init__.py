"""flca: lossless log-file compression with a trainable per-block classifier.

The pipeline tokenizes lines into typed tokens, delta-encodes each line
against its predecessor under one of eight transform variants, entropy
codes fixed-size blocks, and wraps everything in a streaming archive. A
non-linear cellular automaton, trained by a genetic algorithm on real
compressed sizes, routes each block to the variant its redundancy profile
compresses best under.
"""

from .backend import BackendId, CompressedBlock, compress_block, decompress_block
from .container import (ArchiveSummary, VerifyReport, read_archive,
                        verify_archive, write_archive)
from .corpus import CorpusSpec, generate, write_corpus
from .errors import (BackendError, CorruptArchive, CorruptBlock, CorruptModel,
                     CorruptRecord, FlcaError, InsufficientTraining,
                     InternalError, InvalidVariant, NotAnArchive,
                     RefuseExhaustive, UnexpectedEof)
from .nlca import (Basin, BlockFeatures, GaConfig, LogIndexTree, NlcaModel,
                   NlcaRule, classify_block, enumerate_basins,
                   eval_density_rule, extract_features, find_attractor,
                   fitness, is_linear, load_model, save_model, step_lattice,
                   train_density_rule, train_model)
from .tokenizer import (Token, TokenClass, TokenizedLine, classify_token,
                        detokenize, split_lines, tokenize)
from .transform import (TokenDictionary, TransformVariant, VARIANTS,
                        build_dictionary, decode_field, decode_line,
                        encode_field, encode_line, variant_from_id)

__version__ = "0.1.0"
