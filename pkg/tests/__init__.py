# package marker for unittest discovery
