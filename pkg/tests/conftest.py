from serieslm._malloc import prefer_heap_reuse

# the acceptance suite hammers the allocator; keep freed blocks reusable
prefer_heap_reuse()
