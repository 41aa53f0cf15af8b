namespace vsdf {}
