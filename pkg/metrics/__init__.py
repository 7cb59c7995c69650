from metrics.distances import fid, kid, kid_with_std, mmd2_unbiased, trace_sqrt_product
from metrics.embedders import (FeatureEmbedder, RandomProjectionEmbedder, InceptionEmbedder, FEATURE_DIMS,
                               make_embedder, embed_set, projection_batch)
from metrics.mos import rank_to_score, mos_aggregate, mos_statistics, load_rank_records, scores_frame
from metrics.report import (build_report, score_method, merge_mos, report_to_frame, write_report_csv,
                            read_report_csv, merge_reports, rank_marks, format_table)
