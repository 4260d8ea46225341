// placeholder: module implementation pending
