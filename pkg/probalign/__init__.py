# probalign: alignment-based conformance checking over probabilistic event logs
